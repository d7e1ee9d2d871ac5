"""Exact minimum-cost bipartite assignment.

The solver augments one row at a time along a shortest path in the
reduced-cost graph, maintaining dual potentials so edge weights stay
nonnegative (Jonker-Volgenant style successive shortest paths).  Worst
case O(rows * cols^2); the Dijkstra scan is vectorized over columns.

Costs are nonnegative reals; ``inf`` marks a forbidden pairing (an
unranked school, when costs are preference ranks).  Integer costs are
exact: every intermediate quantity is an integer-valued float, and
float64 holds integers exactly up to 2**53, far beyond any rank sum a
realistic market can produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

__all__ = [
    "AssignmentResult",
    "InfeasibleAssignmentError",
    "min_cost_assignment",
    "brute_force_assignment",
]

_BRUTE_FORCE_MAX_ROWS = 8
_BRUTE_FORCE_MAX_PERMS = 5_000_000


class InfeasibleAssignmentError(ValueError):
    """No perfect row-matching with finite total cost exists."""


@lru_cache(maxsize=64)
def _injections(n_cols: int, n_rows: int) -> np.ndarray:
    """All injections of rows into columns, lexicographic, one per row."""
    perms = np.fromiter(
        (j for p in permutations(range(n_cols), n_rows) for j in p),
        dtype=np.int64,
    ).reshape(-1, n_rows)
    perms.setflags(write=False)
    return perms


@dataclass(frozen=True)
class AssignmentResult:
    """A minimum-cost matching: column per row, and the cost it attains."""

    col_of_row: tuple[int, ...]
    total_cost: int | float


def _as_cost_matrix(cost) -> np.ndarray:
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or 0 in c.shape:
        raise ValueError(f"cost matrix must be 2-D and non-empty, got shape {c.shape}")
    if c.shape[0] > c.shape[1]:
        raise ValueError(f"more rows than columns: {c.shape[0]} > {c.shape[1]}")
    if np.isnan(c).any():
        raise ValueError("cost matrix contains NaN")
    if (c[np.isfinite(c)] < 0).any():
        raise ValueError("cost matrix entries must be nonnegative")
    return c


def _result(c: np.ndarray, col_of_row: np.ndarray) -> AssignmentResult:
    matched = c[np.arange(len(col_of_row)), col_of_row]
    total = matched.sum()
    finite = c[np.isfinite(c)]
    if finite.size and np.all(finite == np.round(finite)):
        total = int(total)
    else:
        total = float(total)
    return AssignmentResult(tuple(int(j) for j in col_of_row), total)


def min_cost_assignment(cost) -> AssignmentResult:
    """Exact minimum-cost matching of every row to a distinct column.

    Deterministic: ties inside the shortest-path scan are broken by the
    lowest column index, so identical inputs give identical matchings.
    """
    c = _as_cost_matrix(cost)
    n_rows, n_cols = c.shape
    for i in range(n_rows):
        if not np.isfinite(c[i]).any():
            raise InfeasibleAssignmentError(f"infeasible row {i}: all costs are infinite")

    v = np.zeros(n_cols)  # column potentials; row duals are recomputed on the fly
    row_of_col = np.full(n_cols, -1, dtype=np.int64)
    col_of_row = np.full(n_rows, -1, dtype=np.int64)

    for cur_row in range(n_rows):
        # Dijkstra from cur_row over columns in the reduced-cost graph.
        shortest = np.full(n_cols, np.inf)
        pred_row = np.full(n_cols, cur_row, dtype=np.int64)
        done = np.zeros(n_cols, dtype=bool)
        min_val = 0.0
        i = cur_row
        u_i = 0.0
        sink = -1
        while sink == -1:
            todo = np.nonzero(~done)[0]
            d = min_val + c[i, todo] - u_i - v[todo]
            better = d < shortest[todo]
            if better.any():
                idx = todo[better]
                shortest[idx] = d[better]
                pred_row[idx] = i
            pick = int(np.argmin(shortest[todo]))
            j = int(todo[pick])
            min_val = shortest[j]
            if not np.isfinite(min_val):
                raise InfeasibleAssignmentError(
                    f"infeasible row {cur_row}: no augmenting path with finite cost"
                )
            done[j] = True
            if row_of_col[j] == -1:
                sink = j
            else:
                i = int(row_of_col[j])
                u_i = c[i, j] - v[j]  # dual of the row reached through column j
        # Update potentials of scanned columns, then flip the path.
        scanned = done.copy()
        scanned[sink] = False
        v[scanned] += shortest[scanned] - min_val
        j = sink
        while True:
            i = int(pred_row[j])
            row_of_col[j] = i
            col_of_row[i], j = j, col_of_row[i]
            if i == cur_row:
                break

    return _result(c, col_of_row)


def brute_force_assignment(cost) -> AssignmentResult:
    """Exhaustive minimum over all row-to-column injections (test oracle).

    Guard: at most 8 rows (factorial enumeration).  Deterministic: the
    lexicographically first optimal injection wins.
    """
    c = _as_cost_matrix(cost)
    n_rows, n_cols = c.shape
    if n_rows > _BRUTE_FORCE_MAX_ROWS:
        raise ValueError(
            f"brute force limited to {_BRUTE_FORCE_MAX_ROWS} rows, got {n_rows}"
        )
    if math.perm(n_cols, n_rows) > _BRUTE_FORCE_MAX_PERMS:
        raise ValueError(
            f"brute force would enumerate {math.perm(n_cols, n_rows)} injections"
        )
    perms = _injections(n_cols, n_rows)
    totals = c[np.arange(n_rows)[None, :], perms].sum(axis=1)
    best = int(np.argmin(totals))
    if not np.isfinite(totals[best]):
        for i in range(n_rows):
            if not np.isfinite(c[i]).any():
                raise InfeasibleAssignmentError(
                    f"infeasible row {i}: all costs are infinite"
                )
        raise InfeasibleAssignmentError("no injection with finite total cost")
    return _result(c, perms[best])
