"""Exception hierarchy shared by all modules."""


class LowboundError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(LowboundError, ValueError):
    """Vector dimension does not match the space."""


class UnsupportedOperation(LowboundError, NotImplementedError):
    """Operation is not available for the requested geometry."""


class TooSmallDimension(LowboundError, ValueError):
    """The kernel construction needs n >= 3."""


class NumericalFailure(LowboundError, ArithmeticError):
    """An iterative solve did not reach its tolerance.

    ``residual`` carries the achieved residual or duality gap.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class InvalidConfig(LowboundError, ValueError):
    """Inconsistent adversary or experiment configuration."""


class BudgetExhausted(LowboundError):
    """The adversary was queried more than T times."""


class IncompleteRun(LowboundError):
    """Finalize was called before T queries were answered."""


class DistortionFailure(LowboundError):
    """No random section reached the required sandwich ratio."""


class MalformedFile(LowboundError, ValueError):
    """Instance file is truncated, unparsable, or missing fields."""


class VersionMismatch(MalformedFile):
    pass


class ChecksumMismatch(MalformedFile):
    pass
