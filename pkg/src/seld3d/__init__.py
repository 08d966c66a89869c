"""Desk-scale audio-visual 3D sound event localization and detection toolkit."""

from .errors import (
    BadAspect,
    DuplicateClass,
    EmptyClip,
    EmptyEval,
    FormatError,
    NonFiniteLoss,
    OutOfBounds,
    SeldError,
    ShapeMismatch,
    StaleCache,
    ZeroVector,
)

__version__ = "0.1.0"

__all__ = [
    "BadAspect",
    "DuplicateClass",
    "EmptyClip",
    "EmptyEval",
    "FormatError",
    "NonFiniteLoss",
    "OutOfBounds",
    "SeldError",
    "ShapeMismatch",
    "StaleCache",
    "ZeroVector",
]
