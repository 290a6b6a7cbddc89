"""The DoF region outer bound as an exact polytope.

For every ordering ``pi`` of the users the region obeys

    sum_k d[pi(k)] / min{k,M}  <=  1 + sum_{k<K} (1/min{k,M} - 1/min{K,M}) * a[pi(k)]

plus ``d_k <= 1``. Permutations here are tuples of 1-based user ids, in
position order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import _assignment, _simplex
from .model import ONE, ZERO, DoFPoint, DomainError, MisoError, RangeError, SystemConfig, format_rational

MAX_LP_USERS = 6


def position_weights(cfg: SystemConfig) -> list[Fraction]:
    """LHS weight 1/min{k,M} for positions k = 1..K."""
    return [Fraction(1, cfg.eff(k)) for k in range(1, cfg.k + 1)]


def feedback_weights(cfg: SystemConfig) -> list[Fraction]:
    """RHS weight of the average at position k; zero at the last position."""
    last = Fraction(1, cfg.eff(cfg.k))
    return [Fraction(1, cfg.eff(k)) - last for k in range(1, cfg.k)] + [ZERO]


@dataclass(frozen=True)
class RegionConstraint:
    permutation: tuple[int, ...]
    lhs_coeffs: tuple[Fraction, ...]  # by position
    rhs: Fraction

    def coefficient_of(self, user: int) -> Fraction:
        return self.lhs_coeffs[self.permutation.index(user)]


@dataclass(frozen=True)
class MembershipVerdict:
    inside: bool
    tightest: RegionConstraint
    slack: Fraction

    def to_json(self) -> dict:
        return {
            "inside": self.inside,
            "slack": format_rational(self.slack),
            "tightest_permutation": list(self.tightest.permutation),
        }


def _validate_permutation(cfg: SystemConfig, permutation: Sequence[int]) -> tuple[int, ...]:
    perm = tuple(int(u) for u in permutation)
    if sorted(perm) != list(range(1, cfg.k + 1)):
        raise DomainError(f"{perm} is not a permutation of users 1..{cfg.k}")
    return perm


def _check_inputs(cfg: SystemConfig, averages: Sequence[Fraction], point: DoFPoint | None = None):
    if len(averages) != cfg.k:
        raise DomainError(f"expected {cfg.k} averages, got {len(averages)}")
    for i, a in enumerate(averages, start=1):
        if not ZERO <= Fraction(a) <= ONE:
            raise RangeError(f"average[{i}] = {format_rational(Fraction(a))} is outside [0, 1]")
    if point is not None and len(point) != cfg.k:
        raise DomainError(f"expected a {cfg.k}-user DoF point, got {len(point)} entries")


def constraint(cfg: SystemConfig, averages: Sequence[Fraction], permutation: Sequence[int]) -> RegionConstraint:
    perm = _validate_permutation(cfg, permutation)
    fw = feedback_weights(cfg)
    rhs = ONE + sum((fw[pos] * Fraction(averages[u - 1]) for pos, u in enumerate(perm)), ZERO)
    return RegionConstraint(perm, tuple(position_weights(cfg)), rhs)


def evaluate_constraint(cfg: SystemConfig, averages: Sequence[Fraction], point: DoFPoint,
                        permutation: Sequence[int]) -> tuple[Fraction, Fraction]:
    """Return ``(lhs, rhs)`` of the constraint for ``permutation`` at ``point``."""
    point = point if isinstance(point, DoFPoint) else DoFPoint(tuple(point))
    _check_inputs(cfg, averages, point)
    con = constraint(cfg, averages, permutation)
    lhs = sum((w * point.d[u - 1] for w, u in zip(con.lhs_coeffs, con.permutation)), ZERO)
    return lhs, con.rhs


def _verdict(cfg, averages, point, perm) -> MembershipVerdict:
    lhs, rhs = evaluate_constraint(cfg, averages, point, perm)
    slack = rhs - lhs
    inside = slack >= 0 and all(x <= 1 for x in point.d)
    return MembershipVerdict(inside, constraint(cfg, averages, perm), slack)


def tightest_permutation(cfg: SystemConfig, averages: Sequence[Fraction], point: DoFPoint) -> MembershipVerdict:
    """Find the ordering minimizing ``rhs - lhs`` via an exact assignment problem.

    Placing user u at position k contributes ``d_u/min{k,M} - c_k * a_u`` to
    ``lhs - rhs + 1``; the tightest ordering maximizes the total. Ties go to
    the lexicographically smallest ordering.
    """
    point = point if isinstance(point, DoFPoint) else DoFPoint(tuple(point))
    averages = [Fraction(a) for a in averages]
    _check_inputs(cfg, averages, point)
    pw, fw = position_weights(cfg), feedback_weights(cfg)
    weight = [[point.d[u] * pw[k] - fw[k] * averages[u] for u in range(cfg.k)] for k in range(cfg.k)]
    cols, _ = _assignment.max_weight_assignment_lex(weight)
    return _verdict(cfg, averages, point, tuple(u + 1 for u in cols))


def tightest_permutation_bruteforce(cfg: SystemConfig, averages: Sequence[Fraction],
                                    point: DoFPoint) -> MembershipVerdict:
    """Same contract as :func:`tightest_permutation`, by scanning all K! orderings."""
    point = point if isinstance(point, DoFPoint) else DoFPoint(tuple(point))
    averages = [Fraction(a) for a in averages]
    _check_inputs(cfg, averages, point)
    pw, fw = position_weights(cfg), feedback_weights(cfg)
    # (position, user) contribution to lhs - rhs, scaled to integers so the
    # K! scan stays exact but cheap
    terms = [[pw[k] * point.d[u] - fw[k] * averages[u] for u in range(cfg.k)] for k in range(cfg.k)]
    scale = math.lcm(*(t.denominator for row in terms for t in row))
    ints = [[t.numerator * (scale // t.denominator) for t in row] for row in terms]
    best, best_perm = None, None
    for perm in itertools.permutations(range(cfg.k)):
        excess = sum(ints[k][u] for k, u in enumerate(perm))
        if best is None or excess > best:
            best, best_perm = excess, perm
    return _verdict(cfg, averages, point, tuple(u + 1 for u in best_perm))


def contains(cfg: SystemConfig, averages: Sequence[Fraction], point: DoFPoint) -> bool:
    return tightest_permutation(cfg, averages, point).inside


class UnsupportedSize(MisoError, ValueError):
    pass


def max_sum_dof_lp(cfg: SystemConfig, averages: Sequence[Fraction]) -> tuple[Fraction, DoFPoint]:
    """Exact maximum of the sum DoF over the outer region (rational simplex).

    All K! ordering constraints are enumerated, so K is limited to 6; use
    :func:`misodof.bounds.sum_dof_outer` for larger K. The full-CSIT cap
    ``sum d <= min{K,M}`` is added as one more row: the ordering constraints
    alone do not imply it once the averages sum past min{K,M}.
    """
    averages = [Fraction(a) for a in averages]
    _check_inputs(cfg, averages)
    if cfg.k > MAX_LP_USERS:
        raise UnsupportedSize(
            f"K = {cfg.k} > {MAX_LP_USERS}: too many ordering constraints; use the closed-form sum-DoF bound instead"
        )
    rows, rhs = [], []
    for perm in itertools.permutations(range(1, cfg.k + 1)):
        con = constraint(cfg, averages, perm)
        row = [ZERO] * cfg.k
        for w, u in zip(con.lhs_coeffs, con.permutation):
            row[u - 1] = w
        rows.append(row)
        rhs.append(con.rhs)
    for u in range(cfg.k):
        rows.append([ONE if j == u else ZERO for j in range(cfg.k)])
        rhs.append(ONE)
    rows.append([ONE] * cfg.k)
    rhs.append(Fraction(cfg.rank))
    value, x = _simplex.maximize([ONE] * cfg.k, rows, rhs)
    return value, DoFPoint(tuple(x))


def cyclic_sum_bound(cfg: SystemConfig, averages: Sequence, base: Sequence[int] | None = None):
    """Sum-DoF bound obtained by adding the constraints of the K cyclic shifts of ``base``.

    Every user then carries the same LHS weight, so the summed inequality
    reads ``weight * d_sum <= summed rhs``. Works with any numeric type for
    the averages that supports ``+`` and ``*`` with Fractions.
    """
    base = tuple(base) if base is not None else tuple(range(1, cfg.k + 1))
    _validate_permutation(cfg, base)
    pw, fw = position_weights(cfg), feedback_weights(cfg)
    user_weight = [ZERO] * cfg.k
    rhs_total = 0
    for s in range(cfg.k):
        perm = base[s:] + base[:s]
        rhs_total = rhs_total + 1
        for pos, u in enumerate(perm):
            user_weight[u - 1] += pw[pos]
            rhs_total = rhs_total + fw[pos] * averages[u - 1]
    if len(set(user_weight)) != 1:  # pragma: no cover - each user visits every position once
        raise AssertionError("cyclic shifts should give every user the same weight")
    return rhs_total / user_weight[0]
