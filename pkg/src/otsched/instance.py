"""Problem-domain value types and instance file ingestion.

An instance file is YAML with exactly three top-level keys::

    days: [Mon, Tue, Wed, Thu, Fri]
    room_types:
      - id: main-short
        label: Main short
        duration: 7.5          # scalar (broadcast) or one value per day
        availability: 4        # scalar (broadcast) or one value per day
    departments:
      - id: surgery
        label: Surgery
        target_hours: 187.0
        under_limit: 10.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

__all__ = [
    "Allocation",
    "Department",
    "Instance",
    "InstanceError",
    "RoomType",
    "data_path",
    "dump_instance",
    "load_instance",
    "paper_instance",
    "parse_instance",
    "save_instance",
    "total_capacity_hours",
    "total_demand_hours",
]


class InstanceError(ValueError):
    """Raised for malformed or invalid instance data.

    ``field`` names the offending entry (e.g. ``departments[emergency].target_hours``).
    """

    def __init__(self, message: str, field: str | None = None, path: str | None = None):
        self.field = field
        self.message = message
        self.path = path
        text = f"{field}: {message}" if field else message
        super().__init__(f"{path}: {text}" if path else text)


@dataclass(frozen=True)
class RoomType:
    id: str
    label: str
    duration_by_day: tuple[float, ...]
    availability_by_day: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "duration_by_day", tuple(_num(d) for d in self.duration_by_day))
        object.__setattr__(
            self, "availability_by_day", tuple(_intish(a) for a in self.availability_by_day)
        )


@dataclass(frozen=True)
class Department:
    id: str
    label: str
    target_hours: float
    under_limit: float

    def __post_init__(self):
        object.__setattr__(self, "target_hours", _num(self.target_hours))
        object.__setattr__(self, "under_limit", _num(self.under_limit))


def _num(v):
    if isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool):
        return float(v)
    return v


def _intish(v):
    if isinstance(v, (float, np.floating)) and float(v).is_integer():
        return int(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass(frozen=True)
class Instance:
    days: tuple[str, ...]
    room_types: tuple[RoomType, ...]
    departments: tuple[Department, ...]

    def __post_init__(self):
        object.__setattr__(self, "days", tuple(self.days))
        object.__setattr__(self, "room_types", tuple(self.room_types))
        object.__setattr__(self, "departments", tuple(self.departments))
        _validate(self)

    @property
    def shape(self) -> tuple[int, int, int]:
        """(room types, departments, days)."""
        return len(self.room_types), len(self.departments), len(self.days)

    def durations(self) -> np.ndarray:
        """d[i, k] as a float array."""
        return np.array([rt.duration_by_day for rt in self.room_types], dtype=float)

    def availabilities(self) -> np.ndarray:
        """a[i, k] as an int array."""
        return np.array([rt.availability_by_day for rt in self.room_types], dtype=np.int64)

    def targets(self) -> np.ndarray:
        return np.array([d.target_hours for d in self.departments], dtype=float)

    def limits(self) -> np.ndarray:
        return np.array([d.under_limit for d in self.departments], dtype=float)

    def room_index(self, room_id: str) -> int:
        return _lookup([rt.id for rt in self.room_types], room_id, "room_types")

    def department_index(self, dept_id: str) -> int:
        return _lookup([d.id for d in self.departments], dept_id, "departments")

    def day_index(self, day: str) -> int:
        return _lookup(list(self.days), day, "days")


def _lookup(ids: list[str], key: str, what: str) -> int:
    try:
        return ids.index(key)
    except ValueError:
        raise InstanceError(f"unknown id {key!r}", what) from None


def _validate(inst: Instance) -> None:
    if not inst.days:
        raise InstanceError("at least one day is required", "days")
    if not inst.room_types:
        raise InstanceError("at least one room type is required", "room_types")
    if not inst.departments:
        raise InstanceError("at least one department is required", "departments")
    for what, ids in (
        ("days", list(inst.days)),
        ("room_types", [r.id for r in inst.room_types]),
        ("departments", [d.id for d in inst.departments]),
    ):
        seen = set()
        for key in ids:
            if not isinstance(key, str) or not key:
                raise InstanceError(f"ids must be non-empty strings, got {key!r}", what)
            if key in seen:
                raise InstanceError(f"duplicate id {key!r}", what)
            seen.add(key)

    n_days = len(inst.days)
    for rt in inst.room_types:
        where = f"room_types[{rt.id}]"
        if len(rt.duration_by_day) != n_days:
            raise InstanceError(
                f"expected {n_days} durations, got {len(rt.duration_by_day)}", f"{where}.duration"
            )
        if len(rt.availability_by_day) != n_days:
            raise InstanceError(
                f"expected {n_days} availabilities, got {len(rt.availability_by_day)}",
                f"{where}.availability",
            )
        for d in rt.duration_by_day:
            if not (isinstance(d, float) and math.isfinite(d) and d >= 0):
                raise InstanceError(f"durations must be finite and >= 0, got {d!r}", f"{where}.duration")
        for a in rt.availability_by_day:
            if not (isinstance(a, int) and a >= 0):
                raise InstanceError(
                    f"availabilities must be non-negative integers, got {a!r}", f"{where}.availability"
                )

    for dep in inst.departments:
        where = f"departments[{dep.id}]"
        h = dep.target_hours
        if not (isinstance(h, float) and math.isfinite(h) and h > 0):
            raise InstanceError(f"target_hours must be > 0, got {h!r}", f"{where}.target_hours")
        u = dep.under_limit
        if not (isinstance(u, float) and math.isfinite(u) and u >= 0):
            raise InstanceError(f"under_limit must be >= 0, got {u!r}", f"{where}.under_limit")


@dataclass(frozen=True)
class Allocation:
    """Rooms of type i given to department j on day k, as ``values[i, j, k]``."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 3:
            raise ValueError(f"allocation must be 3-dimensional, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("allocation contains non-finite entries")
        if np.any(arr < 0):
            i, j, k = map(int, np.argwhere(arr < 0)[0])
            raise ValueError(f"allocation entry x[{i},{j},{k}] = {arr[i, j, k]} is negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, instance: Instance) -> Allocation:
        return cls(np.zeros(instance.shape))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def check_shape(self, instance: Instance) -> None:
        if self.values.shape != instance.shape:
            raise ValueError(
                f"allocation shape {self.values.shape} does not match instance shape {instance.shape}"
            )

    def __eq__(self, other):
        if not isinstance(other, Allocation):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))

    __hash__ = None


def total_capacity_hours(instance: Instance) -> float:
    return float(np.sum(instance.durations() * instance.availabilities()))


def total_demand_hours(instance: Instance) -> float:
    return float(sum(d.target_hours for d in instance.departments))


# -- file format -------------------------------------------------------------

_TOP_KEYS = {"days", "room_types", "departments"}
_ROOM_KEYS = {"id", "label", "duration", "availability"}
_DEPT_KEYS = {"id", "label", "target_hours", "under_limit"}


def _as_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"expected a number, got {value!r}", field)
    return float(value)


def _as_count(value, field: str) -> int:
    if isinstance(value, bool):
        raise InstanceError(f"expected an integer, got {value!r}", field)
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, int):
        raise InstanceError(f"expected an integer, got {value!r}", field)
    return value


def _per_day(value, n_days: int, conv, field: str) -> tuple:
    if isinstance(value, list):
        return tuple(conv(v, field) for v in value)
    return (conv(value, field),) * n_days


def _check_keys(entry, allowed: set[str], field: str) -> None:
    if not isinstance(entry, dict):
        raise InstanceError(f"expected a mapping, got {type(entry).__name__}", field)
    unknown = sorted(set(entry) - allowed)
    if unknown:
        raise InstanceError(f"unknown key(s) {', '.join(map(str, unknown))}", field)
    missing = sorted(k for k in allowed - set(entry) if k != "label")
    if missing:
        raise InstanceError(f"missing key(s) {', '.join(missing)}", field)


def parse_instance(data) -> Instance:
    """Build a validated :class:`Instance` from already-decoded YAML data."""
    _check_keys(data, _TOP_KEYS, "<root>")
    days = data["days"]
    if not isinstance(days, list):
        raise InstanceError("expected a list of day labels", "days")
    days = tuple(str(d) for d in days)
    n = len(days)

    if not isinstance(data["room_types"], list):
        raise InstanceError("expected a list", "room_types")
    rooms = []
    for pos, entry in enumerate(data["room_types"]):
        where = f"room_types[{entry.get('id', pos) if isinstance(entry, dict) else pos}]"
        _check_keys(entry, _ROOM_KEYS, where)
        rid = str(entry["id"])
        rooms.append(
            RoomType(
                id=rid,
                label=str(entry.get("label", rid)),
                duration_by_day=_per_day(entry["duration"], n, _as_float, f"{where}.duration"),
                availability_by_day=_per_day(entry["availability"], n, _as_count, f"{where}.availability"),
            )
        )

    if not isinstance(data["departments"], list):
        raise InstanceError("expected a list", "departments")
    depts = []
    for pos, entry in enumerate(data["departments"]):
        where = f"departments[{entry.get('id', pos) if isinstance(entry, dict) else pos}]"
        _check_keys(entry, _DEPT_KEYS, where)
        did = str(entry["id"])
        depts.append(
            Department(
                id=did,
                label=str(entry.get("label", did)),
                target_hours=_as_float(entry["target_hours"], f"{where}.target_hours"),
                under_limit=_as_float(entry["under_limit"], f"{where}.under_limit"),
            )
        )
    return Instance(days=days, room_types=tuple(rooms), departments=tuple(depts))


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"cannot read instance file: {exc.strerror or exc}", path=str(path)) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InstanceError(f"parse error: {exc}", path=str(path)) from exc
    try:
        return parse_instance(data)
    except InstanceError as exc:
        raise InstanceError(exc.message, exc.field, str(path)) from None


def _collapse(values: Sequence):
    # Write a scalar when every day agrees, mirroring how people write these files.
    return values[0] if len(set(values)) == 1 else list(values)


def dump_instance(instance: Instance) -> str:
    data = {
        "days": list(instance.days),
        "room_types": [
            {
                "id": rt.id,
                "label": rt.label,
                "duration": _collapse(list(rt.duration_by_day)),
                "availability": _collapse(list(rt.availability_by_day)),
            }
            for rt in instance.room_types
        ],
        "departments": [
            {
                "id": d.id,
                "label": d.label,
                "target_hours": d.target_hours,
                "under_limit": d.under_limit,
            }
            for d in instance.departments
        ],
    }
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(dump_instance(instance), encoding="utf-8")


def data_path(name: str) -> Path:
    """Path of a file shipped in ``otsched/data``."""
    return Path(str(resources.files("otsched") / "data" / name))


def paper_instance() -> Instance:
    """The five-day, four-room-type, six-department demo instance."""
    days = ("Mon", "Tue", "Wed", "Thu", "Fri")
    rooms = (
        RoomType("main-short", "Main short", (7.5,) * 5, (4,) * 5),
        RoomType("main-long", "Main long", (9.0,) * 5, (4,) * 5),
        RoomType("eops-short", "EOPS short", (7.5,) * 5, (1,) * 5),
        RoomType("eops-long", "EOPS long", (8.0,) * 5, (1,) * 5),
    )
    depts = (
        Department("surgery", "Surgery", 187.0, 10.0),
        Department("gynaecology", "Gynaecology", 117.4, 10.0),
        Department("ophthalmology", "Ophthalmology", 39.4, 10.0),
        Department("oral-surgery", "Oral surgery", 19.9, 10.0),
        Department("otolaryngology", "Otolaryngology", 26.3, 10.0),
        Department("emergency", "Emergency", 5.4, 3.0),
    )
    return Instance(days=days, room_types=rooms, departments=depts)
