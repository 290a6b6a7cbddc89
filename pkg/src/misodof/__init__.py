"""Degrees-of-freedom vs CSIT-feedback tradeoff tools for the K-user M x 1 MISO broadcast channel."""

from .model import (
    DoFPoint,
    DomainError,
    FeedbackCost,
    FeedbackMode,
    FeedbackProfile,
    InfeasibleError,
    MisoError,
    RangeError,
    RationalParseError,
    SystemConfig,
    average_exponents,
    format_rational,
    parse_rational,
    parse_rational_vector,
    total_cost,
)

__version__ = "0.1.0"
