"""Born-rule sampling and the impulsive pointer-coupling unitary.

The measuring device is a one-dimensional pointer discretized on a uniform
periodic grid. A measurement interaction of strength g applies
exp(-i g A (x) p_hat) to the joint system+pointer state: each eigencomponent
of the measured observable A translates the pointer by g times its
eigenvalue. Translations act by phase multiplication in the pointer's
Fourier-conjugate basis, so the evolution is exactly unitary on the grid --
there is no integrator, no time step, and no truncation beyond the grid
itself. The flip side is periodicity: a translation that would push the
wavepacket off one edge re-enters at the other, so couplings are rejected
up front unless the total shift stays under a quarter of the grid extent.

Grid wavefunctions carry the measure: norms are sums of |amplitude|^2
times the grid spacing, matching the continuum normalization they sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DegenerateInputError,
    PreconditionError,
    WraparoundError,
)
from .hilbert import MAX_DIM, EigenDecomposition, HermitianOperator, StateVector, eigendecompose
from .rngs import as_generator

MIN_GRID_POINTS = 16
EXTENT_WIDTH_FACTOR = 20.0   # grid extent must cover >= 20 pointer widths
WIDTH_SPACING_FACTOR = 4.0   # pointer width must cover >= 4 grid spacings
GRID_NORM_TOL = 1e-10        # allowed norm defect for grid wavefunctions
POINTER_MEAN_TOL_FRACTION = 0.1   # ready-pointer mean within spacing/10 of center
DEGENERATE_PROB_TOL = 1e-15  # total Born weight below this cannot be sampled
DEFAULT_GRID_POINTS = 512
DEFAULT_EXTENT_WIDTHS = 40.0


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PointerGrid:
    """Uniform periodic position grid for the pointer degree of freedom."""

    n_points: int
    spacing: float
    center: float = 0.0

    def __post_init__(self) -> None:
        n = int(self.n_points)
        if n < MIN_GRID_POINTS or (n & (n - 1)) != 0:
            raise PreconditionError(
                f"n_points must be a power of two >= {MIN_GRID_POINTS}, got {n}"
            )
        if not (float(self.spacing) > 0.0):
            raise PreconditionError(f"spacing must be positive, got {self.spacing!r}")
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "center", float(self.center))

    @property
    def extent(self) -> float:
        return self.n_points * self.spacing

    @cached_property
    def positions(self) -> np.ndarray:
        idx = np.arange(self.n_points) - self.n_points // 2
        return _readonly(self.center + idx * self.spacing)

    @cached_property
    def momenta(self) -> np.ndarray:
        """Angular wavenumbers conjugate to the positions (hbar = 1)."""
        return _readonly(2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing))

    def to_json_dict(self) -> dict:
        return {"n_points": self.n_points, "spacing": self.spacing, "center": self.center}


def default_grid(width: float = 1.0, n_points: int = DEFAULT_GRID_POINTS,
                 center: float = 0.0) -> PointerGrid:
    """Grid with the default extent of 40 pointer widths."""
    return PointerGrid(n_points, DEFAULT_EXTENT_WIDTHS * width / n_points, center)


@dataclass(frozen=True, eq=False)
class GridWavefunction:
    """One-dimensional wavefunction sampled on a PointerGrid."""

    grid: PointerGrid
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.grid.n_points,):
            raise PreconditionError(
                f"expected {self.grid.n_points} amplitudes, got shape "
                f"{np.shape(self.amplitudes)}"
            )
        norm = float(np.sum(np.abs(amps) ** 2) * self.grid.spacing)
        if abs(norm - 1.0) > GRID_NORM_TOL:
            raise PreconditionError(
                f"grid wavefunction norm {norm!r} differs from 1 by more than {GRID_NORM_TOL}"
            )
        object.__setattr__(self, "amplitudes", _readonly(amps))


@dataclass(frozen=True, eq=False)
class JointSystemPointerState:
    """Entangled state of a d-dimensional system and the pointer.

    amplitudes[i, j] is the amplitude for system basis state i at pointer
    position j; the norm convention is sum |amp|^2 * spacing = 1.
    """

    system_dim: int
    grid: PointerGrid
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        d = int(self.system_dim)
        if d < 1:
            raise PreconditionError(f"system_dim must be >= 1, got {d}")
        if d * self.grid.n_points > MAX_DIM:
            raise PreconditionError(
                f"joint dimension {d * self.grid.n_points} exceeds the {MAX_DIM} cap"
            )
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (d, self.grid.n_points):
            raise PreconditionError(
                f"expected shape {(d, self.grid.n_points)}, got {np.shape(self.amplitudes)}"
            )
        norm = float(np.sum(np.abs(amps) ** 2) * self.grid.spacing)
        if abs(norm - 1.0) > GRID_NORM_TOL:
            raise PreconditionError(
                f"joint state norm {norm!r} differs from 1 by more than {GRID_NORM_TOL}"
            )
        object.__setattr__(self, "system_dim", d)
        object.__setattr__(self, "amplitudes", _readonly(amps))

    def to_json_dict(self) -> dict:
        flat = self.amplitudes.reshape(-1)
        return {
            "system_dim": self.system_dim,
            "grid": self.grid.to_json_dict(),
            "re": [float(a.real) for a in flat],
            "im": [float(a.imag) for a in flat],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "JointSystemPointerState":
        for key in ("system_dim", "grid", "re", "im"):
            if key not in data:
                raise PreconditionError(f"missing JSON field: {key}")
        grid = PointerGrid(**data["grid"])
        d = int(data["system_dim"])
        amps = (np.asarray(data["re"], dtype=float)
                + 1j * np.asarray(data["im"], dtype=float)).reshape(d, grid.n_points)
        return cls(d, grid, amps)


@dataclass(frozen=True, eq=False)
class OutcomeSample:
    """One projective measurement outcome with its collapsed state."""

    eigenvalue: float
    outcome_index: int
    collapsed: StateVector
    probability: float

    def __post_init__(self) -> None:
        if not -1e-12 <= self.probability <= 1.0 + 1e-12:
            raise PreconditionError(
                f"outcome probability {self.probability!r} outside [0, 1]"
            )


# ---------------------------------------------------------------------------
# projective measurement

def born_probabilities(psi: StateVector, basis: EigenDecomposition) -> np.ndarray:
    """p_i = |<v_i|psi>|^2 for each eigenvector of the measured observable."""
    if psi.dim != basis.dim:
        raise PreconditionError(f"dimension mismatch: state {psi.dim} vs basis {basis.dim}")
    overlaps = basis.basis_matrix.conj().T @ psi.amplitudes
    return np.abs(overlaps) ** 2


def strong_measure(psi: StateVector, basis: EigenDecomposition, seed) -> OutcomeSample:
    """Sample one projective outcome and collapse.

    Outcomes are the distinct eigenvalue groups of the basis (degenerate
    eigenvalues within DEGENERACY_TOL count as one outcome); the collapsed
    state is the normalized projection of psi onto the outcome eigenspace.
    `seed` may be a master seed or a Generator; one uniform draw is used.
    """
    rng = as_generator(seed)
    if psi.dim != basis.dim:
        raise PreconditionError(f"dimension mismatch: state {psi.dim} vs basis {basis.dim}")
    overlaps = basis.basis_matrix.conj().T @ psi.amplitudes
    per_vector = np.abs(overlaps) ** 2
    groups = basis.groups
    weights = np.array([per_vector[list(idx)].sum() for _, idx in groups])
    total = float(weights.sum())
    if total <= DEGENERATE_PROB_TOL:
        raise DegenerateInputError(
            f"all outcome probabilities vanished (total {total:.3e})"
        )
    u = rng.random() * total
    acc = 0.0
    k = len(groups) - 1
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            k = i
            break
    value, idx = groups[k]
    idx = list(idx)
    projected = basis.basis_matrix[:, idx] @ overlaps[idx]
    collapsed = StateVector.normalized(projected)
    return OutcomeSample(
        eigenvalue=value,
        outcome_index=k,
        collapsed=collapsed,
        probability=float(min(weights[k], 1.0)),
    )


# ---------------------------------------------------------------------------
# pointer preparation and coupling

def make_pointer(grid: PointerGrid, width: float) -> GridWavefunction:
    """Gaussian ready state: |chi(x)|^2 is normal with sd `width` at grid center."""
    if width < WIDTH_SPACING_FACTOR * grid.spacing:
        raise PreconditionError(
            f"pointer width {width} under-resolved: needs >= "
            f"{WIDTH_SPACING_FACTOR} x spacing = {WIDTH_SPACING_FACTOR * grid.spacing}"
        )
    if grid.extent < EXTENT_WIDTH_FACTOR * width:
        raise PreconditionError(
            f"grid extent {grid.extent} too small for pointer width {width}: "
            f"needs >= {EXTENT_WIDTH_FACTOR * width}"
        )
    x = grid.positions - grid.center
    chi = np.exp(-(x ** 2) / (4.0 * width ** 2)).astype(complex)
    chi /= math.sqrt(float(np.sum(np.abs(chi) ** 2) * grid.spacing))
    return GridWavefunction(grid, chi)


def product_state(system: StateVector, pointer: GridWavefunction) -> JointSystemPointerState:
    """system (x) pointer as a joint state."""
    return JointSystemPointerState(
        system.dim, pointer.grid, np.outer(system.amplitudes, pointer.amplitudes)
    )


def couple_pointer(joint: JointSystemPointerState, op: HermitianOperator, g: float,
                   decomposition: EigenDecomposition | None = None) -> JointSystemPointerState:
    """Apply the impulsive measurement unitary exp(-i g op (x) p_hat).

    Each eigencomponent of `op` has its pointer factor translated by
    g * eigenvalue, exactly, via FFT phase multiplication. Rejected with
    WraparoundError if the largest shift exceeds a quarter of the grid
    extent (periodic wraparound would corrupt the record).

    `decomposition` may carry a precomputed eigendecomposition of `op`;
    callers looping over many couplings of the same observable use this to
    skip redundant eigensolves.
    """
    if op.dim != joint.system_dim:
        raise PreconditionError(
            f"dimension mismatch: operator {op.dim} vs system {joint.system_dim}"
        )
    eig = decomposition if decomposition is not None else eigendecompose(op)
    if eig.dim != op.dim:
        raise PreconditionError("decomposition does not match the operator dimension")
    vals = np.asarray(eig.eigenvalues)
    max_shift = float(abs(g) * np.max(np.abs(vals)))
    if max_shift > joint.grid.extent / 4.0:
        raise WraparoundError(
            f"pointer shift {max_shift:.4g} exceeds a quarter of the grid extent "
            f"({joint.grid.extent / 4.0:.4g}); the grid needs extent >= {4.0 * max_shift:.4g}"
        )
    v = eig.basis_matrix
    eigen_components = v.conj().T @ joint.amplitudes       # rows: eigenbasis wavefunctions
    spectra = np.fft.fft(eigen_components, axis=1)
    phases = np.exp(-1j * g * np.outer(vals, joint.grid.momenta))
    shifted = np.fft.ifft(spectra * phases, axis=1)
    return JointSystemPointerState(joint.system_dim, joint.grid, v @ shifted)


def pointer_marginal(joint: JointSystemPointerState) -> np.ndarray:
    """Position probability density of the pointer (sums to 1 over dx)."""
    return np.sum(np.abs(joint.amplitudes) ** 2, axis=0)


def pointer_position_mean(joint: JointSystemPointerState) -> float:
    """First moment of the pointer position distribution."""
    density = pointer_marginal(joint)
    return float(np.sum(joint.grid.positions * density) * joint.grid.spacing)
