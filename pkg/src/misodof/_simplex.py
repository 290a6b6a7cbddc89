"""Exact primal simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

Dictionary form, Bland's rule for both entering and leaving variables, so
the method terminates without cycling. Entries are Fractions throughout.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class Unbounded(Exception):
    pass


def maximize(c: Sequence[Fraction], a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """Return ``(value, x)`` for the LP. Needs ``b >= 0`` so the origin is feasible."""
    n = len(c)
    m = len(a)
    if any(bi < 0 for bi in b):
        raise ValueError("origin must be feasible (b >= 0)")
    # variables 0..n-1 are decision variables, n..n+m-1 slacks
    nonbasic = list(range(n))
    basic = list(range(n, n + m))
    # row i: basic[i] = rhs[i] - sum_j coef[i][j] * nonbasic[j]
    coef = [[Fraction(x) for x in row] for row in a]
    rhs = [Fraction(x) for x in b]
    obj = [Fraction(x) for x in c]  # z = const + sum_j obj[j] * nonbasic[j]

    while True:
        entering = None
        for j in sorted(range(n), key=lambda j: nonbasic[j]):
            if obj[j] > 0:
                entering = j
                break
        if entering is None:
            break
        leave = None
        best_ratio = None
        for i in range(m):
            if coef[i][entering] > 0:
                ratio = rhs[i] / coef[i][entering]
                if best_ratio is None or ratio < best_ratio or (ratio == best_ratio and basic[i] < basic[leave]):
                    best_ratio, leave = ratio, i
        if leave is None:
            raise Unbounded("objective is unbounded")
        _pivot(coef, rhs, obj, leave, entering)
        basic[leave], nonbasic[entering] = nonbasic[entering], basic[leave]

    x = [Fraction(0)] * n
    for i, var in enumerate(basic):
        if var < n:
            x[var] = rhs[i]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return value, x


def _pivot(coef, rhs, obj, r, e):
    p = coef[r][e]
    row = coef[r]
    # solve row r for the entering variable
    new_row = [x / p for x in row]
    new_row[e] = 1 / p
    new_rhs = rhs[r] / p
    coef[r] = new_row
    rhs[r] = new_rhs
    for i in range(len(coef)):
        if i == r:
            continue
        f = coef[i][e]
        if f == 0:
            continue
        ri = coef[i]
        for j in range(len(ri)):
            ri[j] = -f * new_row[j] if j == e else ri[j] - f * new_row[j]
        rhs[i] -= f * new_rhs
    f = obj[e]
    for j in range(len(obj)):
        obj[j] = -f * new_row[j] if j == e else obj[j] - f * new_row[j]
