"""Closed-form sum-DoF bounds and optimal characterizations, in exact arithmetic."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import (
    ONE,
    ZERO,
    DomainError,
    InfeasibleError,
    RangeError,
    SystemConfig,
    format_rational,
)

log = logging.getLogger(__name__)


def _unit(x, name="delta") -> Fraction:
    x = Fraction(x)
    if not ZERO <= x <= ONE:
        raise RangeError(f"{name} = {format_rational(x)} is outside [0, 1]")
    return x


def mat_dof(cfg: SystemConfig) -> Fraction:
    """Sum DoF with delayed CSIT only: K / sum_k 1/min{k, M}."""
    return Fraction(cfg.k) / sum((Fraction(1, cfg.eff(i)) for i in range(1, cfg.k + 1)), ZERO)


def gamma_dof(cfg: SystemConfig) -> Fraction:
    """Delayed-CSIT sum DoF of the MAT-type scheme for M < K.

    Uses 0**0 == 1, so M = 1 gives exactly 1.
    """
    m, k = cfg.m, cfg.k
    if m >= k:
        raise DomainError("gamma is defined only for M < K")
    r = Fraction(m - 1, m)
    head = sum((Fraction(1, i) * r ** (i - 1) for i in range(1, k - m + 1)), ZERO)
    tail = r ** (k - m) * sum((Fraction(1, i) for i in range(k - m + 1, k + 1)), ZERO)
    return Fraction(m) / (head + tail)


def sum_dof_outer_unclamped(cfg: SystemConfig, averages: Sequence[Fraction]) -> Fraction:
    """Linear outer bound Lambda + (1 - Lambda/min{K,M}) * sum of averages."""
    if len(averages) != cfg.k:
        raise DomainError(f"expected {cfg.k} averages, got {len(averages)}")
    lam = mat_dof(cfg)
    total = sum((_unit(a, "average") for a in averages), ZERO)
    return lam + (1 - lam / cfg.rank) * total


def sum_dof_outer(cfg: SystemConfig, averages: Sequence[Fraction]) -> Fraction:
    """Sum-DoF outer bound, clamped at the full-CSIT value min{K, M}."""
    return min(sum_dof_outer_unclamped(cfg, averages), Fraction(cfg.rank))


def sum_dof_outer_alternating(cfg: SystemConfig, delta) -> Fraction:
    delta = _unit(delta)
    lam = mat_dof(cfg)
    k, r = cfg.k, cfg.rank
    return lam + (k - k * lam / r) * min(delta, Fraction(r, k))


def optimal_sum_dof_m_ge_k(cfg: SystemConfig, delta) -> Fraction:
    if cfg.m < cfg.k:
        raise DomainError("this characterization needs M >= K")
    delta = _unit(delta)
    lam = mat_dof(cfg)
    return (cfg.k - lam) * min(delta, ONE) + lam


def min_cost_m2k3(target) -> Fraction:
    """Minimum total perfect-CSIT cost for sum DoF ``target`` when M=2, K=3."""
    target = Fraction(target)
    if target < 0:
        raise RangeError(f"target sum DoF {format_rational(target)} is negative")
    if target > 2:
        raise InfeasibleError(f"target sum DoF {format_rational(target)} exceeds min{{M,K}} = 2")
    return max(4 * target - 6, ZERO)


def optimal_sum_dof_m2k3(delta) -> Fraction:
    delta = _unit(delta)
    return min(3 * (2 + delta) / 4, Fraction(2))


@dataclass(frozen=True)
class MaxDofCost:
    """Minimum total perfect-CSIT cost to reach sum DoF min{M,K}.

    ``lower_bound`` is the general converse value min{K,M}; ``tdma`` marks
    the degenerate min{M,K} = 1 case where no feedback is needed.
    """

    cost: Fraction
    lower_bound: Fraction
    tdma: bool


def min_cost_max_dof(cfg: SystemConfig) -> MaxDofCost:
    r = cfg.rank
    if r == 1:
        return MaxDofCost(ZERO, Fraction(r), True)
    return MaxDofCost(Fraction(r), Fraction(r), False)


def min_active_users_for_max_dof(cfg: SystemConfig) -> int:
    if cfg.rank == 1:
        log.info("min{M,K} = 1: plain TDMA reaches the maximum sum DoF without current CSIT")
    return cfg.rank


def inner_prop_alternating_m2(k: int, delta) -> Fraction:
    """Time sharing between MAT (3/2) and alternating feedback (2) for M=2, K>=3."""
    if k < 3:
        raise DomainError("needs K >= 3")
    delta = _unit(delta)
    return Fraction(3, 2) + Fraction(k, 4) * min(delta, Fraction(2, k))


def inner_prop_time_sharing(cfg: SystemConfig, delta) -> Fraction:
    """Time sharing between delayed-only MAT and full/alternating feedback."""
    delta = _unit(delta)
    m, k = cfg.m, cfg.k
    if m >= k:
        lam = mat_dof(cfg)
        return (k - lam) * min(delta, ONE) + lam
    gam = gamma_dof(cfg)
    return (k - k * gam / m) * min(delta, Fraction(m, k)) + gam


def inner_sum_dof(cfg: SystemConfig, delta) -> Fraction:
    """Best known achievable sum DoF with symmetric perfect-CSIT fraction ``delta``."""
    best = inner_prop_time_sharing(cfg, delta)
    if cfg.m == 2 and cfg.k >= 3:
        best = max(best, inner_prop_alternating_m2(cfg.k, delta))
    return best


def inner_sum_dof_delayed(k: int, delta_d) -> Fraction:
    """Achievable sum DoF for M=2, K>=3 with delayed-feedback fraction ``delta_d``."""
    if k < 3:
        raise DomainError("needs K >= 3")
    delta_d = _unit(delta_d, "delayed fraction")
    return min(1 + Fraction(k, 2) * delta_d, Fraction(12, 11) + Fraction(4 * k, 11) * delta_d, Fraction(3, 2))


def inner_sum_dof_profile(cfg: SystemConfig, averages: Sequence[Fraction]) -> Fraction:
    """Best known achievable sum DoF for a possibly asymmetric feedback profile.

    The averages are read as perfect-CSIT fractions. Besides the symmetric
    bound at the smallest fraction this uses the greedy full-DoF schedule
    (total cost reaches min{M,K}) and, for M=2, K=3, the two-block scheme.
    """
    averages = [_unit(a, "average") for a in averages]
    if len(averages) != cfg.k:
        raise DomainError(f"expected {cfg.k} averages, got {len(averages)}")
    best = inner_sum_dof(cfg, min(averages))
    total = sum(averages, ZERO)
    r = cfg.rank
    if r > 1 and total >= r:
        best = max(best, Fraction(r))
    if (cfg.m, cfg.k) == (2, 3) and 0 < total < 2 and max(averages) <= total / 2:
        best = max(best, Fraction(3, 2) + total / 4)
    return best


@dataclass(frozen=True)
class BoundReport:
    lambda_mat: Fraction
    gamma: Fraction | None
    outer_sum_dof: Fraction
    outer_sum_dof_unclamped: Fraction
    inner_sum_dof: Fraction
    optimal_sum_dof: Fraction | None

    def to_json(self) -> dict:
        def fmt(x):
            return None if x is None else format_rational(x)

        return {
            "lambda": fmt(self.lambda_mat),
            "gamma": fmt(self.gamma),
            "outer_sum_dof": fmt(self.outer_sum_dof),
            "outer_sum_dof_unclamped": fmt(self.outer_sum_dof_unclamped),
            "inner_sum_dof": fmt(self.inner_sum_dof),
            "optimal_sum_dof": fmt(self.optimal_sum_dof),
        }


def bound_report(cfg: SystemConfig, averages: Sequence[Fraction]) -> BoundReport:
    outer = sum_dof_outer(cfg, averages)
    inner = inner_sum_dof_profile(cfg, averages)
    return BoundReport(
        lambda_mat=mat_dof(cfg),
        gamma=gamma_dof(cfg) if cfg.m < cfg.k else None,
        outer_sum_dof=outer,
        outer_sum_dof_unclamped=sum_dof_outer_unclamped(cfg, averages),
        inner_sum_dof=inner,
        optimal_sum_dof=outer if inner == outer else None,
    )
