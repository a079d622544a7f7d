import csv
import io
import json
import re

import numpy as np
import pytest

from otsched.instance import Allocation, Instance, paper_instance
from otsched.report import (
    ScheduleError,
    evaluate_schedule,
    load_schedule,
    parse_schedule_csv,
    parse_schedule_json,
    percent_of_target,
    render_report,
    report_from_json,
    report_to_json,
    schedule_to_csv,
    validate_schedule,
)

ALLOCATED = [190.0, 117.5, 42.5, 23.0, 27.0, 7.5]
OVER = [3.0, 0.1, 3.1, 3.1, 0.7, 2.1]
PERCENT = [102, 100, 108, 116, 103, 139]


@pytest.fixture
def table3(demo, table3_path):
    return load_schedule(demo, table3_path)


def _hand_hours(inst, alloc):
    # plain loops, independent of the vectorized accounting
    out = []
    for j in range(len(inst.departments)):
        total = 0.0
        for i, rt in enumerate(inst.room_types):
            for k in range(len(inst.days)):
                total += rt.duration_by_day[k] * alloc.values[i, j, k]
        out.append(total)
    return out


def test_table3_goldens(demo, table3):
    rep = evaluate_schedule(demo, table3)
    got = [d.allocated for d in rep.departments]
    np.testing.assert_allclose(got, ALLOCATED, atol=1e-9)
    np.testing.assert_allclose(got, _hand_hours(demo, table3), atol=1e-9)
    np.testing.assert_allclose([d.over for d in rep.departments], OVER, atol=0.05)
    assert [d.under for d in rep.departments] == [0.0] * 6
    assert [d.percent for d in rep.departments] == PERCENT
    assert rep.objective_value == 0.0
    assert rep.total_over_hours == pytest.approx(12.1)
    assert rep.feasible
    assert validate_schedule(demo, table3, require_integral=True).passed


def test_table4_validates_with_printed_rounding(demo, table4_path):
    alloc = load_schedule(demo, table4_path)
    assert validate_schedule(demo, alloc, tolerance=0.05).passed
    assert not validate_schedule(demo, alloc, require_integral=True).passed
    rep = evaluate_schedule(demo, alloc)
    assert max(d.under for d in rep.departments) <= 0.05


def test_report_invariants(demo, table4_path):
    rep = evaluate_schedule(demo, load_schedule(demo, table4_path))
    for d in rep.departments:
        assert d.under * d.over == 0.0
        assert d.allocated == pytest.approx(d.target - d.under + d.over, abs=1e-12)


@pytest.mark.parametrize("allocated, target, expected", [
    (7.5, 5.4, 139), (117.5, 117.4, 100), (190.0, 187.0, 102), (1.0, 200.0, 1), (1.0, 400.0, 0),
    (0.0, 5.0, 0),
])
def test_percent_rounding(allocated, target, expected):
    assert percent_of_target(allocated, target) == expected


def test_percent_rounds_half_away_from_zero():
    assert percent_of_target(1.0, 200.0) == 1  # exactly 0.5
    assert percent_of_target(5.0, 200.0) == 3  # 2.5 rounds up, not to even


def test_empty_schedule(demo):
    rep = evaluate_schedule(demo, Allocation.zeros(demo))
    assert [d.under for d in rep.departments] == [d.target_hours for d in demo.departments]
    assert not rep.feasible
    assert rep.objective_value == pytest.approx(6.0)
    assert json.loads(render_report(rep, "json"))["objective"] == pytest.approx(6.0)
    assert any(v.constraint == "limit[surgery]" for v in rep.violations)


def test_extra_room_breaks_capacity(demo, table3):
    grid = table3.values.copy()
    grid[0, 3, 0] += 1  # oral surgery gets a fifth main-short room on Monday
    verdict = validate_schedule(demo, Allocation(grid), require_integral=True)
    assert not verdict.passed
    assert [v.constraint for v in verdict.violations] == ["capacity[main-short,Mon]"]
    assert verdict.violations[0].magnitude == pytest.approx(1.0)


def test_fractional_schedule_fails_integrality(demo, table3):
    grid = table3.values.copy()
    grid[0, 1, 0] = 3.5
    verdict = validate_schedule(demo, Allocation(grid), require_integral=True)
    assert [v.constraint for v in verdict.violations] == ["integrality[main-short,gynaecology,Mon]"]


def test_text_report(demo, table3):
    text = render_report(evaluate_schedule(demo, table3), "text")
    assert re.search(r"^Emergency .*\b139\b", text, re.M)
    assert "Objective (sum of under/target): 0.000000" in text


def test_csv_report(demo, table3):
    rows = list(csv.DictReader(io.StringIO(render_report(evaluate_schedule(demo, table3), "csv"))))
    assert len(rows) == 6
    np.testing.assert_allclose([float(r["over"]) for r in rows], OVER, atol=0.05)
    assert [int(r["percent"]) for r in rows] == PERCENT


@pytest.mark.parametrize("which", ["table3_path", "table4_path"])
def test_json_round_trip(demo, which, request):
    rep = evaluate_schedule(demo, load_schedule(demo, request.getfixturevalue(which)))
    assert report_from_json(report_to_json(rep)) == rep
    zero = evaluate_schedule(demo, Allocation.zeros(demo))
    assert report_from_json(report_to_json(zero)) == zero


def test_json_schema(demo, table3):
    doc = json.loads(render_report(evaluate_schedule(demo, table3), "json"))
    assert {"objective", "total_over_hours", "feasible", "violations", "departments"} <= doc.keys()
    assert {"id", "allocated", "under", "over", "percent"} <= doc["departments"][0].keys()


def test_json_report_reads_back_as_schedule(demo, table3):
    text = render_report(evaluate_schedule(demo, table3), "json")
    assert parse_schedule_json(demo, text) == table3


def test_schedule_csv_round_trip(demo, table3, table4_path):
    assert parse_schedule_csv(demo, schedule_to_csv(demo, table3)) == table3
    frac = Allocation(load_schedule(demo, table4_path).values / 3.0)
    assert parse_schedule_csv(demo, schedule_to_csv(demo, frac)) == frac


def test_day_order_invariance(demo, table3):
    perm = [4, 2, 0, 3, 1]
    shuffled = Instance(tuple(demo.days[k] for k in perm), demo.room_types, demo.departments)
    a = evaluate_schedule(demo, table3)
    b = evaluate_schedule(shuffled, Allocation(table3.values[:, :, perm]))
    assert a.departments == b.departments
    assert a.objective_value == b.objective_value and a.feasible == b.feasible


@pytest.mark.parametrize("text, fragment", [
    ("", "empty"),
    ("room,department,Mon,Tue,Wed,Thu,Fri\n", "header"),
    ("room_type,department,Mon\n", "day columns"),
    ("room_type,department,Mon,Tue,Wed,Thu,Fri\nmain-short,surgery,1,2\n", "expected 7 fields"),
    ("room_type,department,Mon,Tue,Wed,Thu,Fri\nmain-short,nobody,1,1,1,1,1\n", "nobody"),
    ("room_type,department,Mon,Tue,Wed,Thu,Fri\nmain-short,surgery,1,x,1,1,1\n", "numbers"),
    ("room_type,department,Mon,Tue,Wed,Thu,Fri\nmain-short,surgery,1,-1,1,1,1\n", "negative"),
    ("room_type,department,Mon,Tue,Wed,Thu,Fri\nmain-short,surgery,1,1,1,1,1\nmain-short,surgery,0,0,0,0,0\n",
     "duplicate"),
])
def test_bad_schedule_csv(demo, text, fragment):
    with pytest.raises(ScheduleError, match=fragment):
        parse_schedule_csv(demo, text)


def test_shape_mismatch(demo):
    with pytest.raises(ValueError, match="shape"):
        evaluate_schedule(demo, Allocation(np.zeros((1, 1, 1))))
