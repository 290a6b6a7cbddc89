"""Exact linear assignment (Hungarian method with potentials).

Works with any ordered field type, in particular :class:`fractions.Fraction`,
so optimal values come out exactly.
"""

from __future__ import annotations

from typing import Sequence


def min_cost_assignment(cost: Sequence[Sequence]) -> tuple[list[int], object]:
    """Solve ``min sum_i cost[i][col[i]]`` over permutations ``col``.

    ``cost`` is square, n x n. Returns ``(col, value)`` where ``col[i]`` is the
    column assigned to row ``i``. O(n^3).
    """
    n = len(cost)
    if n == 0:
        return [], 0
    if any(len(row) != n for row in cost):
        raise ValueError("cost matrix must be square")
    zero = cost[0][0] - cost[0][0]
    # 1-based arrays; index 0 is the virtual start column
    u = [zero] * (n + 1)
    v = [zero] * (n + 1)
    match = [0] * (n + 1)  # match[j] = row matched to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [None] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = None
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if minv[j] is None or cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if delta is None or minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    col = [0] * n
    for j in range(1, n + 1):
        col[match[j] - 1] = j - 1
    value = sum((cost[i][col[i]] for i in range(n)), zero)
    return col, value


def max_weight_assignment_lex(weight: Sequence[Sequence]) -> tuple[list[int], object]:
    """Maximum-weight assignment, ties broken toward the lexicographically
    smallest ``col`` vector.

    Fixes rows in order, trying columns in ascending order, and keeps the
    first column whose best completion still reaches the optimum.
    """
    n = len(weight)
    if n == 0:
        return [], 0
    neg = [[-w for w in row] for row in weight]
    _, best = min_cost_assignment(neg)
    best = -best
    zero = best - best
    col: list[int] = []
    fixed = zero
    free = list(range(n))
    for i in range(n):
        for j in free:
            rest_rows = range(i + 1, n)
            rest_cols = [c for c in free if c != j]
            if rest_cols:
                _, rest = min_cost_assignment([[neg[r][c] for c in rest_cols] for r in rest_rows])
                total = fixed + weight[i][j] - rest
            else:
                total = fixed + weight[i][j]
            if total == best:
                col.append(j)
                fixed += weight[i][j]
                free.remove(j)
                break
        else:  # pragma: no cover - optimum always extends
            raise AssertionError("no optimal completion found")
    return col, best
