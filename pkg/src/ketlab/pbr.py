"""Antidistinguishability of {|0>, |+>}, EPR steering, and a unitarity check.

The centerpiece is the four-outcome entangled measurement on two qubits
each independently prepared in |0> or |+>. Its basis states are built so
that every one of the four product preparations is orthogonal to exactly
one outcome: that outcome is "forbidden" for that preparation, and quantum
mechanics predicts it never fires. Any model in which the two single-qubit
preparations share an underlying physical state on some fraction of runs
must put nonzero probability on a forbidden outcome (the ontology module
quantifies the minimum); the experiment here samples the quantum side.

The forbidden pairing is computed from the constructed states at startup
and cross-checked, never hard-coded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InternalError, PreconditionError
from .hilbert import (
    EigenDecomposition,
    HermitianOperator,
    StateVector,
    eigendecompose,
    inner_product,
    ket_minus,
    ket_one,
    ket_plus,
    ket_zero,
    sigma_x,
    sigma_z,
    tensor,
)
from .measurement import born_probabilities, strong_measure
from .rngs import SubstreamSampler

ORTHONORMAL_TOL = 1e-12   # basis Gram deviation allowed
FORBIDDEN_TOL = 1e-12     # |<xi|preparation>| certifying a forbidden pairing
UNITARY_TOL = 1e-10       # max |U^H U - 1| entry allowed
WEIGHT_SUM_TOL = 1e-9     # mixture weights must sum to 1 within this

PREPARATION_IDS = ("00", "0+", "+0", "++")


def preparation_states() -> dict:
    """The four product preparations keyed by their two-character id."""
    single = {"0": ket_zero(), "+": ket_plus()}
    return {a + b: tensor(single[a], single[b]) for a in "0+" for b in "0+"}


@dataclass(frozen=True, eq=False)
class PbrBasis:
    """The four-outcome antidistinguishing basis with its forbidden map."""

    states: tuple
    forbidden_map: dict

    def __post_init__(self) -> None:
        states = tuple(self.states)
        if len(states) != 4 or any(s.dim != 4 for s in states):
            raise PreconditionError("basis must hold four two-qubit states")
        mat = np.column_stack([s.amplitudes for s in states])
        dev = float(np.max(np.abs(mat.conj().T @ mat - np.eye(4))))
        if dev > ORTHONORMAL_TOL:
            raise PreconditionError(
                f"basis states not orthonormal: max Gram deviation {dev:.3e}"
            )
        completeness = float(np.max(np.abs(mat @ mat.conj().T - np.eye(4))))
        if completeness > ORTHONORMAL_TOL:
            raise PreconditionError(
                f"basis states not complete: max resolution deviation {completeness:.3e}"
            )
        object.__setattr__(self, "states", states)

    @cached_property
    def measurement(self) -> EigenDecomposition:
        """The basis as a nondegenerate observable (eigenvalues 1..4)."""
        return EigenDecomposition((1.0, 2.0, 3.0, 4.0), self.states)


def pbr_basis() -> PbrBasis:
    """Construct the antidistinguishing basis and derive its forbidden map.

    Outcome k is forbidden for a preparation when their overlap vanishes;
    the constructor finds the pairing numerically and verifies that it is
    a bijection between the four preparations and the four outcomes.
    """
    zero, one = ket_zero(), ket_one()
    plus, minus = ket_plus(), ket_minus()
    s = 1.0 / math.sqrt(2.0)
    states = tuple(
        StateVector(4, s * (tensor(a1, b1).amplitudes + tensor(a2, b2).amplitudes))
        for (a1, b1), (a2, b2) in (
            ((zero, one), (one, zero)),
            ((zero, minus), (one, plus)),
            ((plus, one), (minus, zero)),
            ((plus, minus), (minus, plus)),
        )
    )
    forbidden = {}
    for prep_id, prep in preparation_states().items():
        hits = [
            k for k, xi in enumerate(states)
            if abs(inner_product(xi, prep)) < FORBIDDEN_TOL
        ]
        if len(hits) != 1:
            raise InternalError(
                f"preparation {prep_id} is orthogonal to {len(hits)} outcomes, expected 1"
            )
        forbidden[prep_id] = hits[0]
    if sorted(forbidden.values()) != [0, 1, 2, 3]:
        raise InternalError(f"forbidden pairing is not a bijection: {forbidden}")
    return PbrBasis(states=states, forbidden_map=forbidden)


@dataclass(frozen=True, eq=False)
class PbrCounts:
    """Contingency table of an antidistinguishability experiment."""

    counts: dict
    trials: int
    seed: int
    forbidden_map: dict

    def __post_init__(self) -> None:
        total = 0
        for prep_id in PREPARATION_IDS:
            row = self.counts.get(prep_id)
            if row is None or len(row) != 4:
                raise PreconditionError(f"counts need a 4-entry row for {prep_id!r}")
            if any(c < 0 for c in row):
                raise PreconditionError(f"negative count in row {prep_id!r}")
            total += sum(row)
            forbidden_count = row[self.forbidden_map[prep_id]]
            if forbidden_count != 0:
                raise PreconditionError(
                    f"forbidden outcome fired {forbidden_count} times for "
                    f"preparation {prep_id!r}; quantum mechanics forbids it exactly"
                )
        if total != self.trials:
            raise PreconditionError(
                f"counts sum to {total}, expected {self.trials} trials"
            )

    def row_totals(self) -> dict:
        return {p: int(sum(self.counts[p])) for p in PREPARATION_IDS}

    def to_json_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "preparations": list(PREPARATION_IDS),
            "counts": {p: [int(c) for c in self.counts[p]] for p in PREPARATION_IDS},
            "forbidden_outcome": {p: int(self.forbidden_map[p]) for p in PREPARATION_IDS},
        }


def pbr_experiment(trials: int, mixture_weights=(0.25, 0.25, 0.25, 0.25),
                   seed: int = 0) -> PbrCounts:
    """Sample preparations from a mixture and measure in the basis.

    Trial t uses random substream t of the master seed (first draw picks
    the preparation, the next drives the projective outcome), so trials
    are independent and reproducible regardless of execution order.

    The preparations are fixed, so their outcome weights are computed once
    up front; each trial then draws from the same inverse CDF that
    `strong_measure` would walk, one uniform per stage. A unit test pins
    the equivalence trial by trial.
    """
    if trials < 0:
        raise PreconditionError(f"trials must be >= 0, got {trials}")
    weights = np.asarray(mixture_weights, dtype=float)
    if weights.shape != (4,) or np.any(weights < 0):
        raise PreconditionError("mixture_weights must be four nonnegative reals")
    if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise PreconditionError(
            f"mixture_weights sum to {float(weights.sum())!r}, expected 1"
        )
    basis = pbr_basis()
    preps = preparation_states()
    mix_cdf = [float(c) for c in np.cumsum(weights)]
    outcome_weights = {}
    outcome_totals = {}
    for p in PREPARATION_IDS:
        born = born_probabilities(preps[p], basis.measurement)
        outcome_weights[p] = [float(w) for w in born]
        outcome_totals[p] = float(born.sum())
    counts = {p: [0, 0, 0, 0] for p in PREPARATION_IDS}
    sampler = SubstreamSampler(seed)
    for t in range(trials):
        rng = sampler.select(t)
        u = rng.random() * mix_cdf[-1]
        which = 3
        for i in range(4):
            if u < mix_cdf[i]:
                which = i
                break
        prep_id = PREPARATION_IDS[which]
        row = outcome_weights[prep_id]
        u = rng.random() * outcome_totals[prep_id]
        acc = 0.0
        outcome = 3
        for i in range(4):
            acc += row[i]
            if u < acc:
                outcome = i
                break
        counts[prep_id][outcome] += 1
    return PbrCounts(counts=counts, trials=trials, seed=int(seed),
                     forbidden_map=basis.forbidden_map)


# ---------------------------------------------------------------------------
# EPR steering on the singlet

@dataclass(frozen=True, eq=False)
class SteeringSample:
    """One steering round: Alice's outcome and Bob's conditional state."""

    alice_basis: str
    alice_outcome: float
    bob_conditional: StateVector
    bob_marginal_check: float


def _singlet() -> StateVector:
    amps = np.zeros(4, dtype=complex)
    amps[1] = 1.0 / math.sqrt(2.0)   # |0>|1>
    amps[2] = -1.0 / math.sqrt(2.0)  # |1>|0>
    return StateVector(4, amps)


def _alice_observable(basis: str) -> HermitianOperator:
    if basis == "z":
        qubit_op = -sigma_z().matrix       # |1><1| - |0><0|
    elif basis == "x":
        qubit_op = sigma_x().matrix        # |+><+| - |-><-|
    else:
        raise PreconditionError(f"alice_basis must be 'z' or 'x', got {basis!r}")
    return HermitianOperator(4, np.kron(qubit_op, np.eye(2)))


def _bob_reduced(joint_amps: np.ndarray) -> np.ndarray:
    c = joint_amps.reshape(2, 2)
    return c.T @ c.conj()


def epr_steering(alice_basis: str, seed) -> SteeringSample:
    """Alice measures her half of the singlet; Bob's half steers.

    In the z basis (outcome operator |1><1| - |0><0|) outcome +1 leaves Bob
    in |0> and outcome -1 in |1>; in the x basis outcome +1 leaves Bob in
    |-> and -1 in |+>. Either way each outcome has probability 1/2 and the
    unconditioned Bob marginal stays maximally mixed: bob_marginal_check is
    the trace distance of the exactly-averaged marginal from 1/2, computed
    from Born weights rather than the sampled outcome.
    """
    state = _singlet()
    op = _alice_observable(alice_basis)
    eig = eigendecompose(op)
    sample = strong_measure(state, eig, seed)
    bob_rho = _bob_reduced(sample.collapsed.amplitudes)
    _, vecs = np.linalg.eigh(bob_rho)
    bob_state = StateVector.normalized(_fix_phase(vecs[:, -1]))
    # exact average over outcomes, from projections rather than samples
    averaged = np.zeros((2, 2), dtype=complex)
    mat = eig.basis_matrix
    overlaps = mat.conj().T @ state.amplitudes
    for _, idx in eig.groups:
        idx = list(idx)
        projected = mat[:, idx] @ overlaps[idx]
        averaged += _bob_reduced(projected)
    deviation = averaged - np.eye(2) / 2.0
    check = float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(deviation))))
    return SteeringSample(
        alice_basis=alice_basis,
        alice_outcome=sample.eigenvalue,
        bob_conditional=bob_state,
        bob_marginal_check=check,
    )


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    pivot = vec[int(np.argmax(np.abs(vec)))]
    return vec * (abs(pivot) / pivot) if abs(pivot) > 0 else vec


# ---------------------------------------------------------------------------
# overlaps survive unitary evolution

def overlap_preservation_check(u: np.ndarray, s1: StateVector, s2: StateVector,
                               ready: StateVector) -> tuple[float, float]:
    """|<ready (x) s1 | ready (x) s2>| before and after a joint unitary.

    A measurement that left the device in different orthogonal records for
    s1 and s2 would need `after` to differ from `before`; unitarity forbids
    it, which is the obstruction this check exhibits numerically. Non-unitary
    input is rejected with the deviation norm.
    """
    if s1.dim != s2.dim:
        raise PreconditionError(f"system dimension mismatch: {s1.dim} vs {s2.dim}")
    u = np.asarray(u, dtype=complex)
    dim = ready.dim * s1.dim
    if u.shape != (dim, dim):
        raise PreconditionError(
            f"unitary must be {dim}x{dim} for device {ready.dim} (x) system {s1.dim}, "
            f"got {u.shape}"
        )
    dev = float(np.max(np.abs(u.conj().T @ u - np.eye(dim))))
    if dev > UNITARY_TOL:
        raise PreconditionError(
            f"matrix is not unitary: max |U^H U - 1| entry = {dev:.3e}"
        )
    v1 = np.kron(ready.amplitudes, s1.amplitudes)
    v2 = np.kron(ready.amplitudes, s2.amplitudes)
    before = float(abs(np.vdot(v1, v2)))
    after = float(abs(np.vdot(u @ v1, u @ v2)))
    return before, after
