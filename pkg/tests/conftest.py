import numpy as np
import pytest

from otsched import simplex
from otsched.instance import Department, Instance, RoomType, data_path, paper_instance


def make_instance(rooms, depts, days=None):
    """rooms: [(duration, availability)], depts: [(target, limit)]; scalars broadcast over days."""
    n_days = days or 1
    labels = tuple(f"d{k}" for k in range(n_days))
    room_types = tuple(
        RoomType(f"r{i}", f"Room {i}", _per_day(d, n_days), _per_day(a, n_days))
        for i, (d, a) in enumerate(rooms)
    )
    departments = tuple(Department(f"p{j}", f"Dept {j}", h, u) for j, (h, u) in enumerate(depts))
    return Instance(labels, room_types, departments)


def _per_day(v, n):
    return tuple(v) if isinstance(v, (list, tuple)) else (v,) * n


def random_instance(rng, fit=False):
    """Toy instance within the oracle's bounds.

    ``fit`` caps targets near each department's share of capacity so that
    most draws are feasible.
    """
    n_rooms = int(rng.integers(1, 3))
    n_depts = int(rng.integers(1, 4))
    n_days = int(rng.integers(1, 3))
    rooms = []
    for _ in range(n_rooms):
        rooms.append((
            [float(rng.choice([1.0, 2.5, 7.5, 9.0])) for _ in range(n_days)],
            [int(rng.integers(0, 3)) for _ in range(n_days)],
        ))
    top = 30.0
    if fit:
        cap = sum(d * a for ds, avs in rooms for d, a in zip(ds, avs))
        top = min(30.0, max(0.5, 1.2 * cap / n_depts))
    depts = [
        (round(float(rng.uniform(0.5, top)), 1), float(rng.choice([0.0, 3.0, 10.0])))
        for _ in range(n_depts)
    ]
    return make_instance(rooms, depts, n_days)


@pytest.fixture
def demo():
    return paper_instance()


@pytest.fixture(params=simplex.available_backends())
def backend(request):
    return request.param


@pytest.fixture
def table3_path():
    return data_path("table3.csv")


@pytest.fixture
def table4_path():
    return data_path("table4.csv")


@pytest.fixture
def infeasible_path():
    return data_path("infeasible.yaml")


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
