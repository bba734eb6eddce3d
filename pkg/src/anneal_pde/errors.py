"""Exception types shared across the package."""


class AnnealPDEError(Exception):
    """Base class for all package errors."""


class DimensionError(AnnealPDEError, ValueError):
    """Array length or index does not match the model it is used with."""


class CapacityError(AnnealPDEError, ValueError):
    """Instance too large for an exhaustive routine."""


class DomainError(AnnealPDEError, ValueError):
    """Value outside the variable domain of a polynomial basis."""


class UnsupportedDegreeError(AnnealPDEError, ValueError):
    pass


class ConfigError(AnnealPDEError, ValueError):
    """Invalid problem, schedule or experiment configuration."""


class NumericError(AnnealPDEError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class ConsistencyError(AnnealPDEError, ValueError):
    """An embedding does not satisfy its structural invariants."""


class EmbeddingFailure(AnnealPDEError):
    """Raised by the experiment runner when no embedding could be found."""


class AnnealerError(AnnealPDEError):
    """An annealer callback failed during an iterative solve."""

    def __init__(self, epoch: int, cause: BaseException):
        super().__init__(f"annealer failed at epoch {epoch}: {cause!r}")
        self.epoch = epoch
        self.cause = cause
