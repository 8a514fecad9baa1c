"""Protective measurement: expectation values from a single system.

One cycle couples the pointer weakly to the observable, then "protects"
the system by projecting it back onto the known prepared state (the
measurement {|psi><psi|, 1 - |psi><psi|} an external protection apparatus
would perform). Over n cycles of strength g the pointer accumulates a
shift of n * g * <psi|A|psi> while the system, conditioned on surviving
every protection, keeps returning to |psi>. Reading the accumulated shift
off a single system is the whole point: no ensemble is consumed.

Two modes:

* "deterministic" follows the renormalized success branch and tracks its
  a-priori probability (the default, and what the tomography chain uses);
* "sampled" draws each protection outcome; a failure aborts the run and is
  reported as a distinct, non-failing outcome on the result.

Protecting a state other than the prepared one models a mismatched
protection apparatus: the first cycles leak the system into the protected
state, with survival probability |<protected|prepared>|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NotPureError, PreconditionError, WraparoundError
from .hilbert import (
    HermitianOperator,
    StateVector,
    eigendecompose,
    inner_product,
)
from .measurement import (
    JointSystemPointerState,
    PointerGrid,
    default_grid,
    make_pointer,
    pointer_position_mean,
    product_state,
    couple_pointer,
)
from .rngs import as_generator

NOT_PURE_TOL = 1e-3          # largest rho eigenvalue below 1 - this: not pure
ORTHOGONAL_LEAK_TOL = 1e-15  # |<protected|prepared>| below this: empty result
COMPLETENESS_RANK_TOL = 1e-8
DEFAULT_STEPS = 400
DEFAULT_COUPLING = 5e-3


class StepRecord(NamedTuple):
    step: int
    survival: float
    pointer_mean: float


@dataclass(frozen=True, eq=False)
class ProtectiveRunResult:
    """Outcome of one protective measurement run."""

    steps: int
    coupling: float
    pointer_mean_shift: float
    survival_probability: float
    inferred_expectation: float | None
    per_step_log: tuple
    mode: str
    aborted_at_step: int | None = None
    final_joint: JointSystemPointerState | None = None

    def __post_init__(self) -> None:
        if not -1e-12 <= self.survival_probability <= 1.0 + 1e-12:
            raise PreconditionError(
                f"survival probability {self.survival_probability!r} outside [0, 1]"
            )
        if self.inferred_expectation is not None and not math.isfinite(self.inferred_expectation):
            raise PreconditionError("inferred expectation must be finite when defined")

    def to_json_dict(self) -> dict:
        return {
            "steps": self.steps,
            "coupling": self.coupling,
            "mode": self.mode,
            "pointer_mean_shift": self.pointer_mean_shift,
            "survival_probability": self.survival_probability,
            "inferred_expectation": self.inferred_expectation,
            "aborted_at_step": self.aborted_at_step,
            "per_step_log": [
                {"step": r.step, "survival": r.survival, "pointer_mean": r.pointer_mean}
                for r in self.per_step_log
            ],
        }


@dataclass(frozen=True, eq=False)
class LeakResult:
    """Survival and surviving state of a mismatched-protection run."""

    survival: float
    surviving_state: StateVector | None


def _protective_loop(initial: StateVector, protected: StateVector,
                     op: HermitianOperator, n: int, g: float,
                     grid: PointerGrid, width: float,
                     mode: str, seed) -> tuple:
    """Shared engine: couple, protect, renormalize, log. Returns
    (log, survival, aborted_at_step, final_joint)."""
    eig = eigendecompose(op)
    max_eig = max(abs(v) for v in eig.eigenvalues)
    total_shift = abs(g) * n * max_eig
    if total_shift > grid.extent / 4.0:
        raise WraparoundError(
            f"accumulated pointer shift {total_shift:.4g} exceeds a quarter of the "
            f"grid extent ({grid.extent / 4.0:.4g}); the grid needs extent >= "
            f"{4.0 * total_shift:.4g}"
        )
    rng = as_generator(seed if seed is not None else 0) if mode == "sampled" else None
    joint = product_state(initial, make_pointer(grid, width))
    c = protected.amplitudes
    survival = 1.0
    log = []
    aborted = None
    for step in range(1, n + 1):
        joint = couple_pointer(joint, op, g, decomposition=eig)
        conditional = c.conj() @ joint.amplitudes
        weight = float(np.sum(np.abs(conditional) ** 2) * grid.spacing)
        if mode == "sampled" and rng.random() > weight:
            aborted = step
            break
        survival *= min(weight, 1.0)
        joint = JointSystemPointerState(
            joint.system_dim, grid, np.outer(c, conditional) / math.sqrt(weight)
        )
        mean_shift = pointer_position_mean(joint) - grid.center
        log.append(StepRecord(step, survival, mean_shift))
    return log, max(min(survival, 1.0), 0.0), aborted, joint


def protective_measure(psi: StateVector, op: HermitianOperator, n: int = DEFAULT_STEPS,
                       g: float = DEFAULT_COUPLING, grid: PointerGrid | None = None,
                       width: float = 1.0, mode: str = "deterministic",
                       seed=None) -> ProtectiveRunResult:
    """Run n protective cycles of strength g, protecting the input state.

    The inferred expectation value is pointer_mean_shift / (n * g), defined
    whenever some coupling accumulated. For psi an eigenstate of op the run
    is exact: shift n * g * eigenvalue with survival 1.
    """
    if mode not in ("deterministic", "sampled"):
        raise PreconditionError(f"unknown mode {mode!r}")
    if n < 0:
        raise PreconditionError(f"step count must be >= 0, got {n}")
    if op.dim != psi.dim:
        raise PreconditionError(f"dimension mismatch: operator {op.dim} vs state {psi.dim}")
    if grid is None:
        grid = default_grid(width)
    log, survival, aborted, joint = _protective_loop(
        psi, psi, op, n, g, grid, width, mode, seed
    )
    completed = len(log)
    shift = log[-1].pointer_mean if log else 0.0
    denominator = completed * g
    inferred = shift / denominator if denominator != 0.0 else None
    return ProtectiveRunResult(
        steps=n,
        coupling=g,
        pointer_mean_shift=shift,
        survival_probability=survival,
        inferred_expectation=inferred,
        per_step_log=tuple(log),
        mode=mode,
        aborted_at_step=aborted,
        final_joint=joint,
    )


def protection_leak(prepared: StateVector, protected: StateVector,
                    op: HermitianOperator, n: int = DEFAULT_STEPS,
                    g: float = DEFAULT_COUPLING, grid: PointerGrid | None = None,
                    width: float = 1.0) -> LeakResult:
    """Protect a different state than was prepared (deterministic mode).

    The first protection collapses the prepared state into the protected
    one, so the run survives with probability |<protected|prepared>|^2 (up
    to O(g^2) coupling corrections) and survivors emerge in the protected
    state. An orthogonal pair returns the explicit empty result: survival
    0 and no surviving state.
    """
    if prepared.dim != protected.dim or op.dim != prepared.dim:
        raise PreconditionError(
            f"dimension mismatch: prepared {prepared.dim}, protected {protected.dim}, "
            f"operator {op.dim}"
        )
    if abs(inner_product(protected, prepared)) < ORTHOGONAL_LEAK_TOL:
        return LeakResult(survival=0.0, surviving_state=None)
    if grid is None:
        grid = default_grid(width)
    log, survival, _, joint = _protective_loop(
        prepared, protected, op, n, g, grid, width, "deterministic", None
    )
    # read the surviving system state back out of the joint state
    rho = (joint.amplitudes * grid.spacing) @ joint.amplitudes.conj().T
    vals, vecs = np.linalg.eigh(rho)
    surviving = _canonical_phase(vecs[:, -1])
    return LeakResult(survival=survival, surviving_state=StateVector.normalized(surviving))


def _canonical_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the largest-magnitude component onto the positive real axis."""
    pivot = vec[int(np.argmax(np.abs(vec)))]
    if abs(pivot) == 0.0:
        return vec
    return vec * (abs(pivot) / pivot)


# ---------------------------------------------------------------------------
# tomography from protective readouts

@dataclass(frozen=True, eq=False)
class TomographySet:
    """Expectation values of an informationally complete operator set.

    The operators, together with the identity (whose expectation is fixed
    at 1 by normalization), must span the real space of Hermitian matrices:
    the augmented Gram matrix must have rank dim^2. The bare Pauli triple
    passes for qubits on that reading.
    """

    operators: tuple
    expectations: tuple

    def __post_init__(self) -> None:
        ops = tuple(self.operators)
        exps = tuple(float(e) for e in self.expectations)
        if not ops:
            raise PreconditionError("tomography needs at least one operator")
        if len(ops) != len(exps):
            raise PreconditionError(
                f"{len(ops)} operators but {len(exps)} expectation values"
            )
        d = ops[0].dim
        if any(o.dim != d for o in ops):
            raise PreconditionError("tomography operators must share one dimension")
        rows = [np.eye(d, dtype=complex).reshape(-1)]
        rows += [o.matrix.reshape(-1) for o in ops]
        stacked = np.array([np.concatenate([r.real, r.imag]) for r in rows])
        rank = np.linalg.matrix_rank(stacked, tol=COMPLETENESS_RANK_TOL)
        if rank < d * d:
            raise PreconditionError(
                f"operator set is informationally incomplete: rank {rank} < {d * d}"
            )
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "expectations", exps)


def _traceless_hermitian_basis(d: int) -> list:
    """Frobenius-orthonormal basis of traceless Hermitian d x d matrices."""
    basis = []
    for i in range(d):
        for j in range(i + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0 / math.sqrt(2.0)
            basis.append(sym)
            asym = np.zeros((d, d), dtype=complex)
            asym[i, j] = -1j / math.sqrt(2.0)
            asym[j, i] = 1j / math.sqrt(2.0)
            basis.append(asym)
    for k in range(1, d):
        diag = np.zeros((d, d), dtype=complex)
        diag[np.diag_indices(d)] = [1.0] * k + [-float(k)] + [0.0] * (d - k - 1)
        basis.append(diag / math.sqrt(float(k * (k + 1))))
    return basis


def reconstruct_state(data: TomographySet) -> StateVector:
    """Least-squares density matrix fit, then the dominant eigenvector.

    Raises NotPureError when the fitted density matrix has largest
    eigenvalue below 1 - NOT_PURE_TOL: the expectations describe something
    too mixed (noisy or inconsistent input) to report as a ket.
    """
    d = data.operators[0].dim
    basis = _traceless_hermitian_basis(d)
    design = np.array([
        [float(np.trace(t @ op.matrix).real) for t in basis]
        for op in data.operators
    ])
    rhs = np.array([
        e - float(np.trace(op.matrix).real) / d
        for op, e in zip(data.operators, data.expectations)
    ])
    coeffs, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    rho = np.eye(d, dtype=complex) / d
    for c, t in zip(coeffs, basis):
        rho += c * t
    vals, vecs = np.linalg.eigh(rho)
    if vals[-1] < 1.0 - NOT_PURE_TOL:
        raise NotPureError(
            f"reconstructed density matrix has largest eigenvalue {vals[-1]:.6f} "
            f"< {1.0 - NOT_PURE_TOL}; input expectations are not those of a pure state"
        )
    return StateVector.normalized(_canonical_phase(vecs[:, -1]))


def protective_tomography(psi: StateVector, operators, n: int = DEFAULT_STEPS,
                          g: float = DEFAULT_COUPLING, grid: PointerGrid | None = None,
                          width: float = 1.0) -> tuple[StateVector, float]:
    """Measure each operator protectively on the same evolving system.

    The pointer is reset between operators; the system is carried over
    (each deterministic protection returns it to |psi>, so the chain keeps
    measuring one and the same system). Returns the reconstructed state
    and the probability that the whole chain survived protection.
    """
    operators = tuple(operators)
    if grid is None:
        grid = default_grid(width)
    system = psi
    total_survival = 1.0
    inferred = []
    for op in operators:
        run = protective_measure(system, op, n=n, g=g, grid=grid, width=width)
        if run.inferred_expectation is None:
            raise PreconditionError(
                "tomography needs n > 0 steps and g != 0 to infer expectations"
            )
        total_survival *= run.survival_probability
        inferred.append(run.inferred_expectation)
        # carry the surviving system over to the next operator (protection
        # returns it to |psi> up to phase; read it back out of the joint
        # state rather than assuming so)
        joint = run.final_joint
        rho = (joint.amplitudes * grid.spacing) @ joint.amplitudes.conj().T
        _, vecs = np.linalg.eigh(rho)
        system = StateVector.normalized(_canonical_phase(vecs[:, -1]))
    reconstructed = reconstruct_state(TomographySet(operators, tuple(inferred)))
    return reconstructed, total_survival
