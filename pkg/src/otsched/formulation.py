"""Build the under-allocation goal program for an :class:`Instance`.

Variables are numbered deterministically: every ``x[i,j,k]`` in
lexicographic (room type, department, day) order, then every ``s[j]``, then
(tight mode only) every ``splus[j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable

import numpy as np

from .instance import Allocation, Instance

LE, GE, EQ = "<=", ">=", "="
_SENSE_CODE = {LE: -1, GE: 1, EQ: 0}


@dataclass(frozen=True)
class Row:
    coeffs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in _SENSE_CODE:
            raise ValueError(f"unknown relation {self.sense!r}")


@dataclass(frozen=True)
class DenseLp:
    """Matrix view of an :class:`LpProblem` consumed by the solvers."""

    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray  # -1 for <=, +1 for >=, 0 for =
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray


@dataclass(frozen=True, eq=False)
class LpProblem:
    """A minimization LP over named variables.

    ``names[v]`` is a tuple such as ``("x", i, j, k)``, ``("s", j)`` or
    ``("splus", j)``.
    """

    objective: tuple[float, ...]
    rows: tuple[Row, ...]
    lower_bounds: tuple[float, ...]
    upper_bounds: tuple[float, ...]
    integrality: tuple[bool, ...]
    names: tuple[tuple, ...]
    objective_offset: float = 0.0
    reduction: Reduction | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.objective)
        for label, seq in (
            ("lower_bounds", self.lower_bounds),
            ("upper_bounds", self.upper_bounds),
            ("integrality", self.integrality),
            ("names", self.names),
        ):
            if len(seq) != n:
                raise ValueError(f"{label} has length {len(seq)}, expected {n}")
        for r, row in enumerate(self.rows):
            for v in row.coeffs:
                if not 0 <= v < n:
                    raise ValueError(f"row {r} references variable {v} outside 0..{n - 1}")

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @cached_property
    def index(self) -> dict[tuple, int]:
        return {name: v for v, name in enumerate(self.names)}

    @cached_property
    def dense(self) -> DenseLp:
        A = np.zeros((self.n_rows, self.n_vars))
        for r, row in enumerate(self.rows):
            for v, a in row.coeffs.items():
                A[r, v] = a
        return DenseLp(
            c=np.array(self.objective, dtype=float),
            A=A,
            senses=np.array([_SENSE_CODE[row.sense] for row in self.rows], dtype=np.int64),
            b=np.array([row.rhs for row in self.rows], dtype=float),
            lower=np.array(self.lower_bounds, dtype=float),
            upper=np.array(self.upper_bounds, dtype=float),
            integrality=np.array(self.integrality, dtype=bool),
        )

    def evaluate(self, values) -> float:
        return float(np.dot(self.objective, values)) + self.objective_offset

    def with_objective(self, objective: Iterable[float]) -> LpProblem:
        return LpProblem(
            tuple(float(c) for c in objective),
            self.rows,
            self.lower_bounds,
            self.upper_bounds,
            self.integrality,
            self.names,
        )

    def with_rows(self, extra: Iterable[Row]) -> LpProblem:
        return LpProblem(
            self.objective,
            self.rows + tuple(extra),
            self.lower_bounds,
            self.upper_bounds,
            self.integrality,
            self.names,
            self.objective_offset,
        )

    def dump(self) -> str:
        """Human-readable listing, one constraint per line."""

        def term(c, v):
            return f"{c:+g}·{var_label(self.names[v])}"

        lines = ["min " + " ".join(term(c, v) for v, c in enumerate(self.objective) if c != 0) or "min 0"]
        for row in self.rows:
            lhs = " ".join(term(c, v) for v, c in row.coeffs.items())
            tag = f"{row.name}: " if row.name else ""
            lines.append(f"{tag}{lhs} {row.sense} {row.rhs:g}")
        for v, name in enumerate(self.names):
            lo, hi = self.lower_bounds[v], self.upper_bounds[v]
            kind = " integer" if self.integrality[v] else ""
            lines.append(f"{lo:g} <= {var_label(name)} <= {hi:g}{kind}")
        return "\n".join(lines) + "\n"


def var_label(name: tuple) -> str:
    kind, *idx = name
    return f"{kind}[{','.join(map(str, idx))}]"


@dataclass(frozen=True)
class CapacityCells:
    """Room-count columns of a model and the capacity rows they share.

    ``var[c]`` is a column index, ``dept[c]`` its department, ``duration[c]``
    the hours one room contributes and ``row[c]`` its capacity group, whose
    room count is ``capacity[row[c]]``.
    """

    var: np.ndarray
    dept: np.ndarray
    duration: np.ndarray
    row: np.ndarray
    capacity: np.ndarray


@dataclass(frozen=True)
class DurationGroup:
    duration: float
    cells: tuple[tuple[int, int, int], ...]  # (room type i, day k, rooms a_ik)

    @property
    def rooms(self) -> int:
        return sum(a for _, _, a in self.cells)


def duration_groups(instance: Instance) -> tuple[DurationGroup, ...]:
    """Cells (i, k) pooled by duration, in first-appearance order."""
    dur = instance.durations()
    avail = instance.availabilities()
    n_rooms, _, n_days = instance.shape
    members: dict[float, list] = {}
    for i in range(n_rooms):
        for k in range(n_days):
            members.setdefault(float(dur[i, k]), []).append((i, k, int(avail[i, k])))
    return tuple(DurationGroup(d, tuple(cells)) for d, cells in members.items())


@dataclass(frozen=True, eq=False)
class Reduction:
    """Symmetry-reduced twin of a full model.

    Cells (i, k) with the same duration are interchangeable for every
    department, so their room counts are pooled into one column ``y[g, j]``
    per duration group.  Any pooled solution splits back into cells without
    breaking a capacity row; :meth:`expand` fills cells in canonical order.
    """

    problem: LpProblem
    groups: tuple[DurationGroup, ...]
    shape: tuple[int, int, int]
    n_full: int

    def expand(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        _, n_depts, _ = self.shape
        grid = np.zeros(self.shape)
        for g, group in enumerate(self.groups):
            left = [float(a) for _, _, a in group.cells]
            for j in range(n_depts):
                want = values[g * n_depts + j]
                for c, (i, k, _) in enumerate(group.cells):
                    if want <= 0.0:
                        break
                    take = min(want, left[c])
                    if take > 0.0:
                        grid[i, j, k] += take
                        left[c] -= take
                        want -= take
                if want > 1e-9:
                    raise ValueError(f"pooled count y[{g},{j}] exceeds the group's rooms")
        out = np.zeros(self.n_full)
        out[: grid.size] = grid.ravel()
        tail = values[len(self.groups) * n_depts :]
        out[grid.size : grid.size + tail.size] = tail
        return out


def capacity_cells(instance: Instance, problem: LpProblem) -> CapacityCells:
    """Describe the room-count columns of a full or reduced model."""
    _, _, n_days = instance.shape
    dur = instance.durations()
    var, dept, duration, row = [], [], [], []
    if any(name[0] == "y" for name in problem.names):
        groups = duration_groups(instance)
        capacity = np.array([g.rooms for g in groups], dtype=float)
        for v, name in enumerate(problem.names):
            if name[0] == "y":
                _, g, j = name
                var.append(v)
                dept.append(j)
                duration.append(groups[g].duration)
                row.append(g)
    else:
        capacity = instance.availabilities().astype(float).ravel()
        for v, name in enumerate(problem.names):
            if name[0] == "x":
                _, i, j, k = name
                var.append(v)
                dept.append(j)
                duration.append(dur[i, k])
                row.append(i * n_days + k)
    return CapacityCells(
        np.array(var, dtype=np.int64),
        np.array(dept, dtype=np.int64),
        np.array(duration, dtype=float),
        np.array(row, dtype=np.int64),
        capacity,
    )


@dataclass(frozen=True)
class FormulationOptions:
    integer_rooms: bool = True
    tight_mode: bool = False


def build_model(instance: Instance, options: FormulationOptions = FormulationOptions()) -> LpProblem:
    """Translate ``instance`` into the goal program.

    Objective: minimize sum_j s_j / h_j.  Rows: room capacity per (i, k) and
    one target row per department.  The under-allocation limit u_j is an
    upper bound on s_j rather than a row.  In tight mode the target rows are
    equalities with an extra over-allocation column ``splus[j]``.

    The returned problem carries its symmetry-reduced twin in ``reduction``.
    """
    n_rooms, n_depts, n_days = instance.shape
    dur = instance.durations()
    avail = instance.availabilities()
    columns = []
    caps = []
    for i in range(n_rooms):
        for k in range(n_days):
            caps.append((f"cap[{instance.room_types[i].id},{instance.days[k]}]", float(avail[i, k])))
    for i in range(n_rooms):
        for j in range(n_depts):
            for k in range(n_days):
                columns.append((("x", i, j, k), i * n_days + k, j, float(dur[i, k])))
    full = _assemble(instance, options, columns, caps)

    groups = duration_groups(instance)
    pooled = [
        (("y", g, j), g, j, group.duration) for g, group in enumerate(groups) for j in range(n_depts)
    ]
    pooled_caps = [(f"cap[{group.duration:g}h]", float(group.rooms)) for group in groups]
    reduced = _assemble(instance, options, pooled, pooled_caps)
    return replace(full, reduction=Reduction(reduced, groups, instance.shape, full.n_vars))


def _assemble(instance: Instance, options: FormulationOptions, columns, caps) -> LpProblem:
    """Shared builder: ``columns`` are (name, capacity row, department, duration)."""
    n_depts = len(instance.departments)
    targets = instance.targets()
    limits = instance.limits()
    assert np.all(targets > 0), "target hours must be positive"

    n_x = len(columns)
    names = [c[0] for c in columns] + [("s", j) for j in range(n_depts)]
    if options.tight_mode:
        names += [("splus", j) for j in range(n_depts)]
    n = len(names)

    objective = [0.0] * n
    upper = [float("inf")] * n
    for j in range(n_depts):
        objective[n_x + j] = 1.0 / targets[j]
        upper[n_x + j] = float(limits[j])

    cap_coeffs: list[dict[int, float]] = [{} for _ in caps]
    goal_coeffs: list[dict[int, float]] = [{n_x + j: 1.0} for j in range(n_depts)]
    for v, (_, r, j, d) in enumerate(columns):
        cap_coeffs[r][v] = 1.0
        goal_coeffs[j][v] = d
    rows = [Row(coeffs, LE, rhs, name) for coeffs, (name, rhs) in zip(cap_coeffs, caps)]
    for j in range(n_depts):
        name = f"goal[{instance.departments[j].id}]"
        coeffs = goal_coeffs[j]
        if options.tight_mode:
            coeffs[n_x + n_depts + j] = -1.0
            rows.append(Row(coeffs, EQ, float(targets[j]), name))
        else:
            rows.append(Row(coeffs, GE, float(targets[j]), name))

    return LpProblem(
        tuple(objective),
        tuple(rows),
        (0.0,) * n,
        tuple(upper),
        (options.integer_rooms,) * n_x + (False,) * (n - n_x),
        tuple(names),
    )


def extract_allocation(instance: Instance, solution) -> Allocation:
    """Arrange the x values of ``solution`` as an :class:`Allocation`.

    ``solution`` needs ``values`` and the ``names`` of the problem it solved.
    """
    n_rooms, n_depts, n_days = instance.shape
    names = solution.names
    values = np.asarray(solution.values, dtype=float)
    n_x = n_rooms * n_depts * n_days
    if len(values) != len(names) or len(names) < n_x + n_depts:
        raise ValueError("solution does not come from a model of this instance")
    grid = np.zeros(instance.shape)
    pos = 0
    for i in range(n_rooms):
        for j in range(n_depts):
            for k in range(n_days):
                if names[pos] != ("x", i, j, k):
                    raise ValueError(
                        f"variable {pos} is {var_label(names[pos])}, expected x[{i},{j},{k}]"
                    )
                v = values[pos]
                if v < -1e-9:
                    raise ValueError(f"x[{i},{j},{k}] = {v} is negative")
                grid[i, j, k] = max(v, 0.0)
                pos += 1
    if names[pos] != ("s", 0) or (len(names) > pos + n_depts and names[pos + n_depts][0] != "splus"):
        raise ValueError("solution does not come from a model of this instance")
    return Allocation(grid)


def slack_values(instance: Instance, solution) -> dict[str, np.ndarray]:
    """The ``s`` (and, when present, ``splus``) columns of a solution."""
    n_rooms, n_depts, n_days = instance.shape
    start = n_rooms * n_depts * n_days
    values = np.asarray(solution.values, dtype=float)
    out = {"s": values[start : start + n_depts].copy()}
    if len(values) >= start + 2 * n_depts:
        out["splus"] = values[start + n_depts : start + 2 * n_depts].copy()
    return out
