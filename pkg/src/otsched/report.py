"""Evaluate, validate and render schedules.

Schedules travel as a CSV grid::

    room_type,department,Mon,Tue,Wed,Thu,Fri
    main-short,surgery,0,0,4,2,4
    ...

or as the ``allocation`` member of a JSON report.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .instance import Allocation, Instance

TOLERANCE = 1e-6
INT_TOL = 1e-6

FORMATS = ("text", "json", "csv")
_CSV_COLUMNS = ("id", "label", "target", "limit", "allocated", "under", "over", "percent")


@dataclass(frozen=True)
class Violation:
    constraint: str
    magnitude: float
    detail: str = ""

    def __str__(self):
        return f"{self.constraint}: {self.detail} (by {self.magnitude:.6g})"


@dataclass(frozen=True)
class DepartmentReport:
    id: str
    label: str
    target: float
    limit: float
    allocated: float
    under: float
    over: float
    percent: int


@dataclass(frozen=True)
class ScheduleReport:
    departments: tuple[DepartmentReport, ...]
    objective_value: float
    total_over_hours: float
    feasible: bool
    violations: tuple[Violation, ...] = ()
    days: tuple[str, ...] = ()
    room_types: tuple[str, ...] = ()
    allocation: tuple = field(default=(), repr=False)  # nested [i][j][k]

    def department(self, dept_id: str) -> DepartmentReport:
        for d in self.departments:
            if d.id == dept_id:
                return d
        raise KeyError(dept_id)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    violations: tuple[Violation, ...]

    def __bool__(self):
        return self.passed


def percent_of_target(allocated: float, target: float) -> int:
    """100 * allocated / target, rounded half away from zero."""
    pct = Decimal(repr(100.0 * allocated / target))
    return int(pct.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _hours(instance: Instance, allocation: Allocation) -> np.ndarray:
    return np.einsum("ik,ijk->j", instance.durations(), allocation.values)


def _violations(instance: Instance, allocation: Allocation, under: np.ndarray,
                tolerance: float, require_integral: bool) -> list[Violation]:
    x = allocation.values
    out = []
    used = x.sum(axis=1)
    avail = instance.availabilities()
    for i, rt in enumerate(instance.room_types):
        for k, day in enumerate(instance.days):
            excess = used[i, k] - avail[i, k]
            if excess > tolerance:
                out.append(Violation(
                    f"capacity[{rt.id},{day}]", float(excess),
                    f"{used[i, k]:g} rooms assigned, {avail[i, k]} available",
                ))
    for j, dep in enumerate(instance.departments):
        excess = under[j] - dep.under_limit
        if excess > tolerance:
            out.append(Violation(
                f"limit[{dep.id}]", float(excess),
                f"under-allocated {under[j]:.6g} h, limit {dep.under_limit:g} h",
            ))
    for i, j, k in np.argwhere(x < -tolerance):
        out.append(Violation(
            f"nonnegative[{instance.room_types[i].id},{instance.departments[j].id},{instance.days[k]}]",
            float(-x[i, j, k]), "negative room count",
        ))
    if require_integral:
        dist = np.abs(x - np.round(x))
        for i, j, k in np.argwhere(dist > INT_TOL):
            out.append(Violation(
                f"integrality[{instance.room_types[i].id},{instance.departments[j].id},{instance.days[k]}]",
                float(dist[i, j, k]), f"{x[i, j, k]:g} rooms is not integral",
            ))
    return out


def evaluate_schedule(instance: Instance, allocation: Allocation, tolerance: float = TOLERANCE) -> ScheduleReport:
    allocation.check_shape(instance)
    hours = _hours(instance, allocation)
    rows = []
    unders = np.zeros(len(instance.departments))
    for j, dep in enumerate(instance.departments):
        alloc = float(hours[j])
        under = max(0.0, dep.target_hours - alloc)
        over = max(0.0, alloc - dep.target_hours)
        unders[j] = under
        rows.append(DepartmentReport(
            dep.id, dep.label, dep.target_hours, dep.under_limit,
            alloc, under, over, percent_of_target(alloc, dep.target_hours),
        ))
    violations = _violations(instance, allocation, unders, tolerance, require_integral=False)
    return ScheduleReport(
        departments=tuple(rows),
        objective_value=float(sum(r.under / r.target for r in rows)),
        total_over_hours=float(sum(r.over for r in rows)),
        feasible=not violations,
        violations=tuple(violations),
        days=instance.days,
        room_types=tuple(rt.id for rt in instance.room_types),
        allocation=_nested(allocation.values),
    )


def validate_schedule(instance: Instance, allocation: Allocation, require_integral: bool = False,
                      tolerance: float = TOLERANCE) -> Verdict:
    """Check capacity, under-allocation limits, non-negativity and optionally integrality.

    ``tolerance`` applies to capacity and limit rows; integrality is always
    checked to within 1e-6.
    """
    allocation.check_shape(instance)
    under = np.maximum(0.0, instance.targets() - _hours(instance, allocation))
    violations = _violations(instance, allocation, under, tolerance, require_integral)
    return Verdict(not violations, tuple(violations))


def _nested(values: np.ndarray) -> tuple:
    return tuple(tuple(tuple(float(v) for v in row) for row in plane) for plane in values)


# -- rendering ---------------------------------------------------------------

def render_report(report: ScheduleReport, fmt: str = "text") -> str:
    if fmt == "json":
        return report_to_json(report)
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "text":
        return _render_text(report)
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def report_to_json(report: ScheduleReport) -> str:
    doc = {
        "objective": report.objective_value,
        "total_over_hours": report.total_over_hours,
        "feasible": report.feasible,
        "violations": [asdict(v) for v in report.violations],
        "departments": [asdict(d) for d in report.departments],
        "days": list(report.days),
        "room_types": list(report.room_types),
        "allocation": [
            {"room_type": rt, "department": d.id, "values": list(report.allocation[i][j])}
            for i, rt in enumerate(report.room_types)
            for j, d in enumerate(report.departments)
        ] if report.allocation else [],
    }
    return json.dumps(doc, indent=2) + "\n"


def report_from_json(text: str) -> ScheduleReport:
    doc = json.loads(text)
    depts = tuple(DepartmentReport(**d) for d in doc["departments"])
    room_types = tuple(doc.get("room_types", ()))
    days = tuple(doc.get("days", ()))
    allocation = ()
    if doc.get("allocation"):
        cells = {(c["room_type"], c["department"]): c["values"] for c in doc["allocation"]}
        allocation = tuple(
            tuple(tuple(float(v) for v in cells[(rt, d.id)]) for d in depts) for rt in room_types
        )
    return ScheduleReport(
        departments=depts,
        objective_value=doc["objective"],
        total_over_hours=doc["total_over_hours"],
        feasible=doc["feasible"],
        violations=tuple(Violation(**v) for v in doc["violations"]),
        days=days,
        room_types=room_types,
        allocation=allocation,
    )


def _render_csv(report: ScheduleReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_COLUMNS)
    for d in report.departments:
        w.writerow([d.id, d.label, _num(d.target), _num(d.limit), _num(d.allocated),
                    _num(d.under), _num(d.over), d.percent])
    return buf.getvalue()


def _num(v: float) -> str:
    return f"{v:.6f}"


def _cell(v: float) -> str:
    return str(int(round(v))) if abs(v - round(v)) < 1e-9 else f"{v:.2f}"


def _exact(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _render_text(report: ScheduleReport) -> str:
    lines = []
    name_w = max([len("Department")] + [len(d.label) for d in report.departments])
    if report.allocation:
        widest = max(len(_cell(v)) for plane in report.allocation for row in plane for v in row)
        day_w = max(4, widest + 1, *(len(d) + 1 for d in report.days))
        block_w = day_w * len(report.days)
        head1 = " " * name_w + " |"
        head2 = "Department".ljust(name_w) + " |"
        for rt in report.room_types:
            head1 += f" {rt[:block_w - 1].center(block_w - 1)} |"
            head2 += "".join(day.rjust(day_w) for day in report.days) + " |"
        lines += ["Room allocation (rooms per day)", head1, head2, "-" * len(head2)]
        for j, d in enumerate(report.departments):
            row = d.label.ljust(name_w) + " |"
            for i in range(len(report.room_types)):
                row += "".join(_cell(v).rjust(day_w) for v in report.allocation[i][j]) + " |"
            lines.append(row)
        lines.append("")

    header = (f"{'Department'.ljust(name_w)} {'Target':>8} {'Allocated':>10} {'Under':>8} "
              f"{'Over':>8} {'Percent':>8} {'Limit':>8}")
    lines += ["Allocation against targets (hours)", header, "-" * len(header)]
    for d in report.departments:
        lines.append(
            f"{d.label.ljust(name_w)} {d.target:8.1f} {d.allocated:10.2f} {d.under:8.2f} "
            f"{d.over:8.2f} {d.percent:8d} {d.limit:8.1f}"
        )
    lines += [
        "",
        f"Objective (sum of under/target): {report.objective_value:.6f}",
        f"Total over-allocation: {report.total_over_hours:.2f} h",
        f"Feasible: {'yes' if report.feasible else 'no'}",
    ]
    for v in report.violations:
        lines.append(f"  violation {v}")
    return "\n".join(lines) + "\n"


# -- schedule files ----------------------------------------------------------

class ScheduleError(ValueError):
    pass


def schedule_to_csv(instance: Instance, allocation: Allocation) -> str:
    allocation.check_shape(instance)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["room_type", "department", *instance.days])
    for i, rt in enumerate(instance.room_types):
        for j, dep in enumerate(instance.departments):
            w.writerow([rt.id, dep.id, *(_exact(v) for v in allocation.values[i, j])])
    return buf.getvalue()


def parse_schedule_csv(instance: Instance, text: str) -> Allocation:
    """Read a CSV grid; (room type, department) pairs that are absent count as zero."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ScheduleError("schedule file is empty") from None
    header = [h.strip() for h in header]
    if header[:2] != ["room_type", "department"]:
        raise ScheduleError("header must start with room_type,department")
    if tuple(header[2:]) != instance.days:
        raise ScheduleError(f"day columns {header[2:]} do not match instance days {list(instance.days)}")
    grid = np.zeros(instance.shape)
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ScheduleError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        rt, dep = row[0].strip(), row[1].strip()
        try:
            i = instance.room_index(rt)
            j = instance.department_index(dep)
        except ValueError as exc:
            raise ScheduleError(f"line {lineno}: {exc}") from None
        if (i, j) in seen:
            raise ScheduleError(f"line {lineno}: duplicate row for {rt},{dep}")
        seen.add((i, j))
        try:
            grid[i, j] = [float(c) for c in row[2:]]
        except ValueError:
            raise ScheduleError(f"line {lineno}: room counts must be numbers") from None
    return _checked(grid, "CSV schedule")


def parse_schedule_json(instance: Instance, text: str) -> Allocation:
    try:
        doc = json.loads(text)
        cells = doc["allocation"]
    except (ValueError, KeyError, TypeError):
        raise ScheduleError("JSON schedule needs an 'allocation' list") from None
    if tuple(doc.get("days", instance.days)) != instance.days:
        raise ScheduleError("JSON schedule days do not match the instance")
    grid = np.zeros(instance.shape)
    for c in cells:
        try:
            i = instance.room_index(c["room_type"])
            j = instance.department_index(c["department"])
            values = [float(v) for v in c["values"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScheduleError(f"bad allocation entry {c!r}: {exc}") from None
        if len(values) != len(instance.days):
            raise ScheduleError(f"allocation entry {c['room_type']},{c['department']} has wrong day count")
        grid[i, j] = values
    return _checked(grid, "JSON schedule")


def _checked(grid: np.ndarray, what: str) -> Allocation:
    try:
        return Allocation(grid)
    except ValueError as exc:
        raise ScheduleError(f"{what}: {exc}") from None


def load_schedule(instance: Instance, path: str | Path) -> Allocation:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScheduleError(f"{path}: cannot read schedule: {exc.strerror or exc}") from exc
    parse = parse_schedule_json if path.suffix.lower() == ".json" or text.lstrip().startswith("{") else parse_schedule_csv
    try:
        return parse(instance, text)
    except ScheduleError as exc:
        raise ScheduleError(f"{path}: {exc}") from None
