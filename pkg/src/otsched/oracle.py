"""Exhaustive enumeration of integer schedules for toy instances.

Ground truth for the solvers.  Shares nothing with the LP code paths: it
walks every way of handing out at most a_ik rooms of each (type, day) cell
among the departments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .instance import Allocation, Instance

MAX_SPACE = 10**7
LIMIT_TOL = 1e-9


class SearchSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    feasible: bool
    primary: float = math.nan
    secondary: float = math.nan
    witness: Allocation | None = None
    n_optimal: int = 0  # schedules attaining (primary, secondary)
    n_evaluated: int = 0


def search_space(instance: Instance) -> int:
    n_depts = len(instance.departments)
    return math.prod((a + 1) ** n_depts for rt in instance.room_types for a in rt.availability_by_day)


@lru_cache(maxsize=None)
def _compositions(rooms: int, parts: int) -> tuple[tuple[int, ...], ...]:
    """All ways to give at most ``rooms`` rooms to ``parts`` departments."""
    if parts == 0:
        return ((),)
    out = []
    for first in range(rooms + 1):
        for rest in _compositions(rooms - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def brute_force(instance: Instance, max_space: int = MAX_SPACE) -> OracleResult:
    """Return the best primary objective and, among its minimizers, the least over-allocation."""
    space = search_space(instance)
    if space > max_space:
        raise SearchSpaceError(f"enumeration space {space} exceeds {max_space}")

    n_rooms, n_depts, n_days = instance.shape
    cells = [
        (i, k, instance.room_types[i].duration_by_day[k], instance.room_types[i].availability_by_day[k])
        for i in range(n_rooms)
        for k in range(n_days)
    ]
    targets = [d.target_hours for d in instance.departments]
    limits = [d.under_limit for d in instance.departments]

    best = None  # (primary_key, secondary_key)
    best_vals = (math.nan, math.nan)
    witness = None
    count = 0
    evaluated = 0
    choice = [None] * len(cells)

    def visit(c, hours):
        nonlocal best, best_vals, witness, count, evaluated
        if c == len(cells):
            evaluated += 1
            primary = 0.0
            secondary = 0.0
            for j in range(n_depts):
                under = max(0.0, targets[j] - hours[j])
                if under > limits[j] + LIMIT_TOL:
                    return
                primary += under / targets[j]
                secondary += max(0.0, hours[j] - targets[j])
            key = (round(primary, 12), round(secondary, 12))
            if best is None or key < best:
                best, best_vals, count = key, (primary, secondary), 1
                witness = list(choice)
            elif key == best:
                count += 1
            return
        _, _, dur, avail = cells[c]
        for split in _compositions(avail, n_depts):
            choice[c] = split
            visit(c + 1, [h + dur * n for h, n in zip(hours, split)])

    visit(0, [0.0] * n_depts)
    if best is None:
        return OracleResult(False, n_evaluated=evaluated)

    grid = np.zeros(instance.shape)
    for (i, k, _, _), split in zip(cells, witness):
        grid[i, :, k] = split
    return OracleResult(True, best_vals[0], best_vals[1], Allocation(grid), count, evaluated)
