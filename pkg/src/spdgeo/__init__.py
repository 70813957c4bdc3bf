"""Scaling-rotation geometry on symmetric positive-definite matrices."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapExceededError,
    DimensionError,
    NumericalFailure,
    PreconditionError,
    SpdGeoError,
    ValidationError,
)

__all__ = [
    "CapExceededError",
    "DimensionError",
    "NumericalFailure",
    "PreconditionError",
    "SpdGeoError",
    "ValidationError",
]
