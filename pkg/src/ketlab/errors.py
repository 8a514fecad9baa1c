"""Exception hierarchy shared by every lab module.

The CLI maps these onto exit codes: ConfigError -> 2, PreconditionError
(and subclasses) -> 3, InternalError (and subclasses) -> 4.
"""


class LabError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(LabError):
    """A run configuration that fails static validation."""


class PreconditionError(LabError):
    """An operation rejected its inputs before doing any work."""


class WraparoundError(PreconditionError):
    """A pointer translation would wrap around the periodic grid."""


class UndefinedWeakValueError(PreconditionError):
    """Pre- and postselection are (numerically) orthogonal."""


class ScanUndefinedError(PreconditionError):
    """The scanned wavefunction has no zero-momentum component."""


class PostselectionError(PreconditionError):
    """Postselection succeeded too rarely to condition on."""


class DegenerateInputError(PreconditionError):
    """All outcome probabilities vanished; nothing can be sampled."""


class InternalError(LabError):
    """An internal consistency check failed mid-computation."""


class NotPureError(InternalError):
    """A reconstructed density matrix is too mixed to report a ket."""


class CertificationError(InternalError):
    """An optimization finished without a small enough duality gap."""
