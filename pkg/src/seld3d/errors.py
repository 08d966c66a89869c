"""Exception types shared across the toolkit."""


class SeldError(Exception):
    """Base class for every error raised by seld3d."""


class ZeroVector(SeldError, ValueError):
    """A vector is too short to carry a direction."""


class OutOfBounds(SeldError, IndexError):
    pass


class FormatError(SeldError, ValueError):
    """A file is truncated, corrupt or not in the expected format."""


class ShapeMismatch(SeldError, ValueError):
    pass


class EmptyClip(SeldError, ValueError):
    pass


class DuplicateClass(SeldError, ValueError):
    """Two events of the same class share one label frame."""


class StaleCache(SeldError, ValueError):
    """A backward pass was given a cache from a different forward call."""


class NonFiniteLoss(SeldError, FloatingPointError):
    pass


class BadAspect(SeldError, ValueError):
    pass


class EmptyEval(SeldError, ValueError):
    pass
