"""Core domain types for the K-user M x 1 MISO broadcast channel.

Every exact quantity (CSIT exponents, averages, costs, DoF values) is a
:class:`fractions.Fraction`. Floats only appear in :mod:`misodof.numerics`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class MisoError(Exception):
    """Base class for all errors raised by this package."""


class RationalParseError(MisoError, ValueError):
    def __init__(self, token: str, reason: str = "not a rational number"):
        self.token = token
        super().__init__(f"cannot parse {token!r}: {reason}")


class RangeError(MisoError, ValueError):
    pass


class DomainError(MisoError, ValueError):
    pass


class InfeasibleError(MisoError, ValueError):
    pass


def parse_rational(token: str) -> Fraction:
    """Parse ``"p/q"``, an integer or a terminating decimal exactly."""
    text = token.strip()
    if not text:
        raise RationalParseError(token, "empty entry")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise RationalParseError(token, str(exc)) from None


def format_rational(x: Fraction | int) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_rational_vector(text: str, *, unit_interval: bool = False) -> list[Fraction]:
    """Parse a comma separated list such as ``"1/3,2/3,1"`` or ``"0.25,3/4"``.

    With ``unit_interval=True`` every entry must lie in [0, 1].
    """
    values = [parse_rational(tok) for tok in text.split(",")]
    if unit_interval:
        for tok, v in zip(text.split(","), values):
            if not ZERO <= v <= ONE:
                raise RangeError(f"entry {tok.strip()!r} = {format_rational(v)} is outside [0, 1]")
    return values


def _check_unit(values: Iterable[Fraction], what: str) -> None:
    for i, v in enumerate(values, start=1):
        if not ZERO <= v <= ONE:
            raise RangeError(f"{what}[{i}] = {format_rational(v)} is outside [0, 1]")


@dataclass(frozen=True)
class SystemConfig:
    """Transmit antenna count ``m`` (M) and user count ``k`` (K)."""

    m: int
    k: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.k) != self.k or self.m < 1 or self.k < 1:
            raise DomainError(f"need integers m >= 1 and k >= 1, got m={self.m}, k={self.k}")

    @property
    def rank(self) -> int:
        """min{M, K}: the full-CSIT sum DoF."""
        return min(self.m, self.k)

    def eff(self, i: int) -> int:
        """min{i, M}, written i' in the converse."""
        return min(i, self.m)


class FeedbackMode(str, enum.Enum):
    QUALITY = "quality"
    ALTERNATING = "alternating-perfect"
    DELAYED = "delayed-only"


@dataclass(frozen=True)
class FeedbackProfile:
    """Per-user CSIT quality exponents and their time averages.

    ``per_slot_exponents[k][t]`` is the exponent of user k+1 in slot t+1.
    In alternating mode the averages are the perfect-CSIT fractions; in
    delayed-only mode they are the delayed-feedback fractions.
    """

    averages: tuple[Fraction, ...]
    per_slot_exponents: tuple[tuple[Fraction, ...], ...] | None = None
    mode: FeedbackMode = FeedbackMode.QUALITY

    def __post_init__(self):
        object.__setattr__(self, "averages", tuple(Fraction(a) for a in self.averages))
        object.__setattr__(self, "mode", FeedbackMode(self.mode))
        _check_unit(self.averages, "average")
        if self.per_slot_exponents is not None:
            rows = tuple(tuple(Fraction(a) for a in row) for row in self.per_slot_exponents)
            object.__setattr__(self, "per_slot_exponents", rows)
            if len(rows) != len(self.averages):
                raise DomainError("per-slot matrix must have one row per user")
            for row in rows:
                _check_unit(row, "exponent")
            if self.mode is FeedbackMode.ALTERNATING and any(a not in (ZERO, ONE) for row in rows for a in row):
                raise DomainError("alternating-perfect mode needs every exponent in {0, 1}")
            if tuple(_row_mean(r) for r in rows) != self.averages:
                raise DomainError("averages do not match the per-slot exponents")

    @classmethod
    def from_slots(cls, rows: Sequence[Sequence[Fraction | int]], mode=FeedbackMode.QUALITY) -> "FeedbackProfile":
        rows = tuple(tuple(Fraction(a) for a in row) for row in rows)
        return cls(averages=tuple(_row_mean(r) for r in rows), per_slot_exponents=rows, mode=mode)

    @property
    def k(self) -> int:
        return len(self.averages)

    @property
    def cost(self) -> "FeedbackCost":
        return total_cost(self.averages)


def _row_mean(row: Sequence[Fraction]) -> Fraction:
    if len(row) == 0:
        raise DomainError("per-slot exponents need at least one slot")
    return sum(row, ZERO) / len(row)


def average_exponents(profile: FeedbackProfile) -> list[Fraction]:
    """Exact per-user mean of the per-slot exponents."""
    if profile.per_slot_exponents is None:
        raise DomainError("profile carries no per-slot exponents")
    return [_row_mean(row) for row in profile.per_slot_exponents]


@dataclass(frozen=True)
class FeedbackCost:
    """Total CSIT feedback cost: sum of the per-user averages."""

    total: Fraction

    def __str__(self) -> str:
        return format_rational(self.total)


def total_cost(averages: Sequence[Fraction]) -> FeedbackCost:
    averages = [Fraction(a) for a in averages]
    _check_unit(averages, "average")
    return FeedbackCost(sum(averages, ZERO))


@dataclass(frozen=True)
class DoFPoint:
    """A K-tuple of nonnegative per-user DoF values.

    Achievable points have every entry at most 1; the cap is not enforced
    here so that region queries can report points that break it.
    """

    d: tuple[Fraction, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(Fraction(x) for x in self.d))
        for i, x in enumerate(self.d, start=1):
            if x < 0:
                raise RangeError(f"d[{i}] = {format_rational(x)} is negative")

    @property
    def total(self) -> Fraction:
        return sum(self.d, ZERO)

    def __len__(self) -> int:
        return len(self.d)

    def __iter__(self):
        return iter(self.d)
