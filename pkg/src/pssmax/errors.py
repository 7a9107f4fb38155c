"""Exception types shared across the package."""


class PssmaxError(Exception):
    """Base class for all package-specific errors."""


class ModelError(PssmaxError, ValueError):
    """A model violates a structural invariant (e.g. monotone paths)."""


class SchemaError(ModelError):
    """A model file does not match the documented JSON schema."""


class NoConvergence(PssmaxError, RuntimeError):
    """An iteration (root finding, series, quadrature) hit its cap."""


class Degenerate(PssmaxError, ValueError):
    """Operation undefined because the model sits on the integer seam
    where the inverse exponent at the killing rate is an integer multiple
    of the self-similarity index."""


class DomainError(PssmaxError, ValueError):
    """Arguments outside an operation's domain (e.g. start above barrier)."""


class NotFiniteVariation(DomainError):
    """Operation requires a finite-variation model."""


class ConsistencyError(PssmaxError, RuntimeError):
    """Two independent evaluation routes disagree beyond tolerance."""


class Unsupported(PssmaxError, ValueError):
    """Requested simulation regime is outside the supported envelope."""
