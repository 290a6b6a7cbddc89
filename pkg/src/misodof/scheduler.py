"""Achievability schedules at the symbol-count level.

A schedule is a run of slots grouped into blocks. ``zf`` blocks send one
fresh symbol per active user with perfect current CSIT (zero-forcing).
``mat2user`` blocks deliver 4 symbols to two users over 3 slots and
``mat3user-m2`` blocks deliver 12 symbols to three users over 8 slots with
two transmit antennas; both rely on delayed CSIT only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import (
    ONE,
    ZERO,
    DomainError,
    InfeasibleError,
    MisoError,
    RangeError,
    SystemConfig,
    format_rational,
)

PERFECT = "perfect"
DELAYED = "delayed"
NONE = "none"

ZF = "zf"
MAT2 = "mat2user"
MAT3 = "mat3user-m2"

BLOCK_SHAPE = {MAT2: (3, 4), MAT3: (8, 12)}  # slots, symbols


class ScheduleError(MisoError, ValueError):
    pass


@dataclass(frozen=True)
class SlotPlan:
    t: int
    active_users: tuple[int, ...]
    feedback: dict[int, str]
    symbols: Fraction


@dataclass(frozen=True)
class Block:
    kind: str
    first: int
    last: int
    users: tuple[int, ...] = ()

    @property
    def length(self) -> int:
        return self.last - self.first + 1


@dataclass
class Schedule:
    cfg: SystemConfig
    slots: list[SlotPlan] = field(default_factory=list)
    blocks: list[Block] = field(default_factory=list)

    def to_json(self, audit: "ScheduleAudit | None" = None) -> dict:
        audit = audit or audit_schedule(self)
        return {
            "m": self.cfg.m,
            "k": self.cfg.k,
            "slots": [
                {
                    "t": s.t,
                    "active": list(s.active_users),
                    "feedback": {str(u): s.feedback[u] for u in range(1, self.cfg.k + 1)},
                }
                for s in self.slots
            ],
            "blocks": [{"kind": b.kind, "slots": [b.first, b.last]} for b in self.blocks],
            "audit": audit.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


@dataclass(frozen=True)
class ScheduleAudit:
    per_user_perfect_fraction: tuple[Fraction, ...]
    per_user_delayed_fraction: tuple[Fraction, ...]
    sum_dof: Fraction
    total_perfect_cost: Fraction

    def to_json(self) -> dict:
        return {
            "perfect": [format_rational(x) for x in self.per_user_perfect_fraction],
            "delayed": [format_rational(x) for x in self.per_user_delayed_fraction],
            "sum_dof": format_rational(self.sum_dof),
        }


def minimal_period(deltas: Sequence[Fraction]) -> int:
    """Least n making every n * delta_k an integer."""
    n = 1
    for d in deltas:
        d = Fraction(d)
        if not ZERO <= d <= ONE:
            raise RangeError(f"fraction {format_rational(d)} is outside [0, 1]")
        n = math.lcm(n, d.denominator)
    return n


def _greedy_groups(budgets: Sequence[int], n: int, width: int) -> list[tuple[int, ...]]:
    """Run the budgeted selection for ``n`` slots; budgets are integer slot counts.

    Each slot sorts users by (remaining budget, user id) ascending and takes
    the last ``width`` positions.
    """
    remaining = list(budgets)
    groups = []
    for _ in range(n):
        order = sorted(range(len(remaining)), key=lambda u: (remaining[u], u))
        chosen = order[len(order) - width:]
        if any(remaining[u] <= 0 for u in chosen):
            raise InfeasibleError("budget exhausted before the last slot")
        for u in chosen:
            remaining[u] -= 1
        groups.append(tuple(sorted(u + 1 for u in chosen)))
    if any(remaining):
        raise InfeasibleError(f"budgets not exhausted: {remaining}")
    return groups


def _zf_slots(cfg: SystemConfig, groups, start: int) -> list[SlotPlan]:
    slots = []
    for i, group in enumerate(groups):
        fb = {u: (PERFECT if u in group else NONE) for u in range(1, cfg.k + 1)}
        slots.append(SlotPlan(start + i, group, fb, Fraction(len(group))))
    return slots


def greedy_schedule(cfg: SystemConfig, deltas: Sequence[Fraction]) -> Schedule:
    """Full-DoF schedule spending exactly ``deltas`` of perfect CSIT per user."""
    deltas = [Fraction(d) for d in deltas]
    if len(deltas) != cfg.k:
        raise DomainError(f"expected {cfg.k} fractions, got {len(deltas)}")
    r = cfg.rank
    if r == 1:
        raise DomainError("min{M,K} = 1: TDMA needs no feedback, nothing to schedule")
    for i, d in enumerate(deltas, start=1):
        if not ZERO <= d <= ONE:
            raise InfeasibleError(f"delta[{i}] = {format_rational(d)} is outside [0, 1]")
    total = sum(deltas, ZERO)
    if total != r:
        raise InfeasibleError(f"fractions sum to {format_rational(total)}, need exactly min{{M,K}} = {r}")
    n = minimal_period(deltas)
    groups = _greedy_groups([int(d * n) for d in deltas], n, r)
    return Schedule(cfg, _zf_slots(cfg, groups, 1), [Block(ZF, 1, n, tuple(range(1, cfg.k + 1)))])


def _mat_block(cfg: SystemConfig, kind: str, users: Sequence[int], start: int, all_delayed: bool):
    """Slots of one MAT block.

    Sparse feedback pattern (delayed-only accounting): with two users, each
    reports the slot that carried the other user's symbols; with three
    users, each reports the two first-phase slots of the other users and the
    one second-phase slot of the pair it is not in. With ``all_delayed``
    every block user reports delayed CSIT in every slot.
    """
    length, symbols = BLOCK_SHAPE[kind]
    users = tuple(users)
    if kind == MAT2:
        reporters = [{users[1]}, {users[0]}, set()]
    else:
        a, b, c = users
        reporters = [{b, c}, {a, c}, {a, b}, {c}, {a}, {b}, set(), set()]
    per_slot = Fraction(symbols, length)
    slots = []
    for i in range(length):
        rep = set(users) if all_delayed else reporters[i]
        fb = {u: (DELAYED if u in rep else NONE) for u in range(1, cfg.k + 1)}
        slots.append(SlotPlan(start + i, tuple(sorted(users)), fb, per_slot))
    return slots, Block(kind, start, start + length - 1, users)


def two_block_schedule(deltas: Sequence[Fraction]) -> Schedule:
    """M=2, K=3: greedy full-DoF block followed by delayed-CSIT MAT blocks.

    Reaches sum DoF 3/2 + C/4 with per-user perfect fractions exactly
    ``deltas``, where C is their sum.
    """
    cfg = SystemConfig(2, 3)
    deltas = [Fraction(d) for d in deltas]
    if len(deltas) != 3:
        raise DomainError("the two-block scheme is defined for three users")
    for i, d in enumerate(deltas, start=1):
        if not ZERO <= d <= ONE:
            raise InfeasibleError(f"delta[{i}] = {format_rational(d)} is outside [0, 1]")
    cost = sum(deltas, ZERO)
    if cost > 2:
        raise InfeasibleError(f"total cost {format_rational(cost)} exceeds 2")
    if cost == 0:
        slots, block = _mat_block(cfg, MAT3, (1, 2, 3), 1, all_delayed=True)
        return Schedule(cfg, slots, [block])
    for i, d in enumerate(deltas, start=1):
        if d > cost / 2:
            raise InfeasibleError(
                f"delta[{i}] = {format_rational(d)} exceeds half the total cost {format_rational(cost / 2)}"
            )
    shares = [2 * d / cost for d in deltas]  # slots per block-1 slot
    ratio = 2 / cost  # (n + n') / n
    n = minimal_period([s for s in shares] + [ratio - int(ratio)])
    n_prime = int(n * (ratio - 1))
    if n_prime % 8:
        n *= 8 // math.gcd(n_prime, 8)
        n_prime = int(n * (ratio - 1))
    groups = _greedy_groups([int(s * n) for s in shares], n, 2)
    slots = _zf_slots(cfg, groups, 1)
    blocks = [Block(ZF, 1, n, (1, 2, 3))]
    t = n + 1
    for _ in range(n_prime // 8):
        s, b = _mat_block(cfg, MAT3, (1, 2, 3), t, all_delayed=True)
        slots += s
        blocks.append(b)
        t += 8
    return Schedule(cfg, slots, blocks)


def delayed_block_schedule(k: int, target: Fraction) -> Schedule:
    """M=2, K>=3 delayed-only schedules reaching sum DoF 4/3 or 3/2.

    Block b serves a cyclic window of users starting at user b: two users
    for 4/3 (3-slot blocks), three users for 3/2 (8-slot blocks).
    """
    target = Fraction(target)
    if k < 3:
        raise DomainError("delayed block schedules need K >= 3")
    if target == Fraction(4, 3):
        kind, width = MAT2, 2
    elif target == Fraction(3, 2):
        kind, width = MAT3, 3
    else:
        raise DomainError(f"target must be 4/3 or 3/2, got {format_rational(target)}")
    cfg = SystemConfig(2, k)
    slots, blocks = [], []
    t = 1
    for b in range(k):
        users = tuple((b + i) % k + 1 for i in range(width))
        s, blk = _mat_block(cfg, kind, users, t, all_delayed=False)
        slots += s
        blocks.append(blk)
        t += blk.length
    return Schedule(cfg, slots, blocks)


def time_share(point_a, point_b, target_delta) -> tuple[Fraction, Fraction]:
    """Mix two (feedback, DoF) operating points to hit ``target_delta``.

    Returns ``(mix, dof)`` where ``mix`` is the time fraction spent at
    ``point_a``.
    """
    (da, fa), (db, fb) = [(Fraction(x), Fraction(y)) for x, y in (point_a, point_b)]
    target = Fraction(target_delta)
    if da == db:
        raise DomainError("the two operating points need different feedback levels")
    lo, hi = min(da, db), max(da, db)
    if not lo <= target <= hi:
        raise RangeError(f"target {format_rational(target)} is outside [{format_rational(lo)}, {format_rational(hi)}]")
    mix = (db - target) / (db - da)
    return mix, fb + mix * (fa - fb)


def validate_schedule(s: Schedule) -> None:
    problems = []
    if not s.slots:
        problems.append("schedule has no slots")
    for i, slot in enumerate(s.slots, start=1):
        if slot.t != i:
            problems.append(f"slot index {slot.t} at position {i}; indices must run 1, 2, ...")
            break
    covered = []
    for b in s.blocks:
        covered.extend(range(b.first, b.last + 1))
    if covered != list(range(1, len(s.slots) + 1)):
        problems.append("block ranges do not partition the slots in order")
    users = range(1, s.cfg.k + 1)
    by_t = {slot.t: slot for slot in s.slots}
    for b in s.blocks:
        block_slots = [by_t[t] for t in range(b.first, b.last + 1) if t in by_t]
        if b.kind == ZF:
            for slot in block_slots:
                if len(slot.active_users) > s.cfg.rank:
                    problems.append(f"slot {slot.t}: {len(slot.active_users)} active users > min{{M,K}}")
                perfect = {u for u in users if slot.feedback.get(u) == PERFECT}
                if perfect != set(slot.active_users):
                    problems.append(f"slot {slot.t}: perfect-CSIT users differ from the active users")
        elif b.kind in BLOCK_SHAPE:
            length, _ = BLOCK_SHAPE[b.kind]
            if b.length != length:
                problems.append(f"{b.kind} block at slot {b.first} has {b.length} slots, expected {length}")
            if s.cfg.m != 2:
                problems.append(f"{b.kind} blocks assume two transmit antennas")
            for slot in block_slots:
                if any(slot.feedback.get(u) == PERFECT for u in users):
                    problems.append(f"slot {slot.t}: perfect CSIT inside a delayed-CSIT block")
        else:
            problems.append(f"unknown block kind {b.kind!r}")
    for slot in s.slots:
        if set(slot.feedback) != set(users):
            problems.append(f"slot {slot.t}: feedback map must cover users 1..{s.cfg.k}")
        if any(mode not in (PERFECT, DELAYED, NONE) for mode in slot.feedback.values()):
            problems.append(f"slot {slot.t}: unknown feedback mode")
    if problems:
        raise ScheduleError("; ".join(problems))


def audit_schedule(s: Schedule) -> ScheduleAudit:
    """Exact per-user feedback fractions and sum DoF of a schedule."""
    validate_schedule(s)
    n = len(s.slots)
    users = range(1, s.cfg.k + 1)
    perfect = [Fraction(sum(1 for slot in s.slots if slot.feedback[u] == PERFECT), n) for u in users]
    delayed = [Fraction(sum(1 for slot in s.slots if slot.feedback[u] == DELAYED), n) for u in users]
    symbols = 0
    by_t = {slot.t: slot for slot in s.slots}
    for b in s.blocks:
        if b.kind == ZF:
            symbols += sum(len(by_t[t].active_users) for t in range(b.first, b.last + 1))
        else:
            symbols += BLOCK_SHAPE[b.kind][1]
    return ScheduleAudit(tuple(perfect), tuple(delayed), Fraction(symbols, n), sum(perfect, ZERO))
