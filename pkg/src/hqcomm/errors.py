"""Exception hierarchy shared by every hqcomm module."""


class HQCommError(Exception):
    """Base class for all hqcomm errors."""


class StateError(HQCommError, ValueError):
    """Invalid quantum state or register operation."""


class NonPowerOfTwoLength(StateError):
    pass


class ZeroNorm(StateError):
    pass


class RegisterTooLarge(StateError):
    pass


class IndexOutOfRange(StateError, IndexError):
    pass


class DuplicateTarget(StateError):
    pass


class SizeMismatch(StateError):
    pass


class NotUnitary(StateError):
    pass


class ZeroProbabilityBranch(StateError):
    """A forced measurement outcome has (numerically) zero Born probability."""

    def __init__(self, message: str, probability: float = 0.0):
        super().__init__(message)
        self.probability = probability


class ChannelError(HQCommError, ValueError):
    pass


class NonFiniteLambda(ChannelError):
    pass


class NotOrthogonal(ChannelError):
    pass


class NotNormalized(ChannelError):
    pass


class DegenerateOrdering(ChannelError):
    pass


class MaximalChannelWarning(UserWarning):
    """Raised (as a warning) when a non-maximal channel is built with a == b."""


class UnsupportedChannelForPerfectPath(HQCommError, ValueError):
    pass


class CopyCountOutOfRange(HQCommError, ValueError):
    pass


class InvalidConfig(HQCommError, ValueError):
    """Scenario configuration rejected; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
