"""Exception hierarchy shared by all modules."""


class CavityEntropyError(Exception):
    """Base class of every error raised by this package."""


class DomainError(CavityEntropyError, ValueError):
    """An argument lies outside the supported domain of an operation."""


class SingularityError(DomainError):
    """An argument hits a singular point of a function (e.g. H1 at z = 0)."""


class InvariantViolationError(CavityEntropyError, ValueError):
    """An input violates a mathematical invariant (e.g. S > log N)."""


class DegenerateFieldError(CavityEntropyError, ValueError):
    """A field is identically zero and cannot be normalised."""


class DiscretizationError(CavityEntropyError, ValueError):
    """The boundary discretisation is too coarse for the requested wavenumber."""


class SolverError(CavityEntropyError, RuntimeError):
    """An iterative solver failed to converge."""


class ModeIdentificationError(SolverError):
    """A root was found but it belongs to a different mode than requested."""


class NoResonanceError(SolverError):
    """A minimum of the smallest singular value is not a resonance dip."""


class CollisionError(SolverError):
    """Two tracked modes converged onto the same resonance."""


class NotResolvedError(CavityEntropyError, RuntimeError):
    """A convergence criterion was never met on the supplied schedule."""


class ConfigError(CavityEntropyError, ValueError):
    """A run configuration is malformed."""


class CacheError(CavityEntropyError, RuntimeError):
    """A cache file is missing, unreadable or fails its checksum."""
