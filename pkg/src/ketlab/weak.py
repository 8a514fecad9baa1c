"""Weak values and the direct wavefunction scan.

A weak value <post|A|pre> / <post|pre> is what a feebly coupled pointer
records, to first order in the coupling, when the system is preselected in
|pre> and postselected in |post>. Unlike an expectation value it is complex
and can lie far outside the spectrum of A; the imaginary part shows up in
the pointer momentum rather than its position.

The direct scan reads a wavefunction off a grid one cell at a time: the
weak value of the cell projector at x (the discrete stand-in for |x><x|,
weighted 1/spacing) with postselection on the zero-momentum state is
proportional to psi(x) itself, with a single x-independent constant
<p=0|psi>. Both quadratures of psi are recovered pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InternalError,
    PostselectionError,
    PreconditionError,
    ScanUndefinedError,
    UndefinedWeakValueError,
)
from .hilbert import (
    HermitianOperator,
    StateVector,
    equal_up_to_phase,
    inner_product,
)
from .measurement import (
    GridWavefunction,
    PointerGrid,
    couple_pointer,
    make_pointer,
    pointer_marginal,
    product_state,
)

OVERLAP_TOL = 1e-12          # |<post|pre>| below this: weak value undefined
MOMENTUM_ZERO_TOL = 1e-10    # |<p=0|psi>| below this: scan undefined
POSTSELECT_PROB_TOL = 1e-15  # simulated postselection probability floor
REAL_RESIDUE_TOL = 1e-10     # allowed Im part when pre = post up to phase


@dataclass(frozen=True, eq=False)
class WeakValueResult:
    """A weak value together with the pre/postselection that defined it."""

    value: complex
    pre: StateVector
    post: StateVector
    overlap: complex

    def __post_init__(self) -> None:
        if abs(self.overlap) <= 0.0:
            raise UndefinedWeakValueError("weak value with zero pre/post overlap")


def weak_value(op: HermitianOperator, pre: StateVector, post: StateVector) -> WeakValueResult:
    """<post|op|pre> / <post|pre>.

    Rejected when the pre/postselection overlap is numerically zero: the
    ratio is then dominated by noise, not physics.
    """
    if op.dim != pre.dim or pre.dim != post.dim:
        raise PreconditionError(
            f"dimension mismatch: op {op.dim}, pre {pre.dim}, post {post.dim}"
        )
    overlap = inner_product(post, pre)
    if abs(overlap) <= OVERLAP_TOL:
        raise UndefinedWeakValueError(
            f"pre/postselection overlap magnitude {abs(overlap):.3e} <= {OVERLAP_TOL}; "
            "weak value undefined"
        )
    numerator = complex(np.vdot(post.amplitudes, op.matrix @ pre.amplitudes))
    value = numerator / overlap
    if equal_up_to_phase(pre, post) and abs(value.imag) >= REAL_RESIDUE_TOL:
        raise InternalError(
            f"weak value with pre = post has imaginary residue {value.imag:.3e}"
        )
    return WeakValueResult(value=value, pre=pre, post=post, overlap=overlap)


def momentum_zero_amplitude(psi: GridWavefunction) -> complex:
    """<p=0|psi> up to grid normalization: sum of psi(x) * spacing."""
    return complex(np.sum(psi.amplitudes) * psi.grid.spacing)


def direct_wavefunction_scan(psi: GridWavefunction) -> np.ndarray:
    """Weak value of the grid-cell projector at each x, postselected on p = 0.

    Returns psi(x) / <p=0|psi>: the wavefunction itself, divided by one
    x-independent constant. Multiplying back by `momentum_zero_amplitude`
    recovers psi exactly on the grid. Undefined (rejected) when the
    zero-momentum component vanishes, e.g. for odd wavefunctions.
    """
    p0 = momentum_zero_amplitude(psi)
    if abs(p0) <= MOMENTUM_ZERO_TOL:
        raise ScanUndefinedError(
            f"zero-momentum component magnitude {abs(p0):.3e} <= {MOMENTUM_ZERO_TOL}; "
            "scan undefined"
        )
    return psi.amplitudes / p0


def weak_pointer_shift(psi: StateVector, op: HermitianOperator, post: StateVector,
                       g: float, grid: PointerGrid, width: float) -> tuple[float, float]:
    """Simulated postselected pointer readout.

    Couples a fresh Gaussian pointer to `op` with strength g, postselects
    the system on |post>, and returns (conditional pointer mean shift,
    postselection success probability). As g -> 0 the shift approaches
    g * Re(weak value).
    """
    overlap = inner_product(post, psi)
    if abs(overlap) <= OVERLAP_TOL:
        raise UndefinedWeakValueError(
            f"pre/postselection overlap magnitude {abs(overlap):.3e} <= {OVERLAP_TOL}; "
            "postselected shift undefined"
        )
    joint = product_state(psi, make_pointer(grid, width))
    coupled = couple_pointer(joint, op, g)
    conditional = post.amplitudes.conj() @ coupled.amplitudes
    prob = float(np.sum(np.abs(conditional) ** 2) * grid.spacing)
    if prob < POSTSELECT_PROB_TOL:
        raise PostselectionError(
            f"postselection probability {prob:.3e} below {POSTSELECT_PROB_TOL}; "
            "conditional statistics undefined"
        )
    density = np.abs(conditional) ** 2
    mean = float(np.sum(grid.positions * density) * grid.spacing / prob)
    return mean - grid.center, prob
