"""Exception types shared across the package."""


class CavityQSDError(Exception):
    """Base class for package errors."""


class DimensionMismatch(CavityQSDError, ValueError):
    """Operands have incompatible shapes."""


class KernelKindError(CavityQSDError, ValueError):
    """A kernel of the wrong kind was passed to a sampler or solver."""


class GridMismatch(CavityQSDError, ValueError):
    """Two objects do not share the same time grid."""


class PoleEncountered(CavityQSDError, ArithmeticError):
    """The coefficient ODEs hit the known Riccati divergence.

    Attributes:
        t: time at which the solution blew past the ceiling.
    """

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"coefficient solution diverged near t = {t:.6g}")


class NonFiniteValue(CavityQSDError, ArithmeticError):
    """A NaN or Inf appeared during integration.

    Attributes:
        location: tuple describing where (time, and optionally s, s').
    """

    def __init__(self, location, message=None):
        self.location = location
        super().__init__(message or f"non-finite value at {location}")


class ExcessiveRejects(CavityQSDError, RuntimeError):
    """More than the allowed fraction of trajectories overflowed."""

    def __init__(self, rejected, total):
        self.rejected = rejected
        self.total = total
        super().__init__(
            f"{rejected} of {total} trajectories overflowed (limit is 0.1%)"
        )


class CutoffNotConverged(CavityQSDError, ArithmeticError):
    """Doubling the Fock cutoff changed observables beyond tolerance."""


class MemoryGuard(CavityQSDError, MemoryError):
    """Requested coefficient storage exceeds the configured cap."""


class ConfigError(CavityQSDError, ValueError):
    """Invalid run configuration.

    Attributes:
        field: the offending section/key, when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message if field is None else f"[{field}] {message}")
