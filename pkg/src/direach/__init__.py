"""Validated reachability for input-affine differential inclusions."""

from .exceptions import (
    BoundingFailed,
    DimensionError,
    DomainError,
    IntegrationFailed,
    ParseError,
    ReachError,
    StepFailure,
    StepTooLarge,
    Timeout,
)
from .interval import Interval, IntervalBox
from .taylor import TaylorModel, TaylorModelVector

__version__ = "0.1.0"
