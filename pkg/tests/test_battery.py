import csv
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from districtbench.battery import battery_kpis, extract_turning_points, rainflow_cycles

HISTORY = [v / 100 for v in (10, 50, 30, 80, 20, 60, 40, 70)]
LABELS = "ABCDEFGH"

# dyadic grid keeps sums and differences exact
dyadic = st.integers(0, 64).map(lambda k: k / 64)
series = st.lists(dyadic, min_size=2, max_size=40)


def labelled(cs):
    return {(LABELS[c.from_index] + "-" + LABELS[c.to_index]): round(c.range, 12) for c in cs}


def test_worked_history_turning_points():
    tp = extract_turning_points(HISTORY)
    assert tp.indices == tuple(range(8))
    assert tp.values == tuple(HISTORY)


def test_worked_history_cycles():
    cs = rainflow_cycles(extract_turning_points(HISTORY))
    assert labelled(cs) == {"A-D": 0.7, "B-C": 0.2, "E-H": 0.5, "F-G": 0.2}
    assert all(c.kind == "full" for c in cs)


def test_worked_history_reversals():
    cs = rainflow_cycles(extract_turning_points(HISTORY))
    got = Counter(round(r * 100) for r in cs.reversals())
    assert got == Counter([70, 70, 20, 20, 50, 50, 20, 20])


def test_worked_history_battery_kpis():
    # B-C (50 -> 30) and F-G (60 -> 40) are the discharge-directed cycles
    k = battery_kpis(HISTORY, capacity=6.4)
    assert k["n_discharges"] == 2
    assert k["avg_dod"] == pytest.approx(0.2)
    assert k["avg_discharge_duration"] == 1.0
    assert k["avg_dod_kwh"] == pytest.approx(0.2 * 6.4)


def test_monotone_keeps_endpoints():
    tp = extract_turning_points(np.linspace(0, 1, 11))
    assert tp.indices == (0, 10)


def test_plateau_keeps_endpoints():
    assert extract_turning_points([0.5, 0.5, 0.5]).indices == (0, 2)


def test_plateau_collapses_to_first_index():
    tp = extract_turning_points([0.2, 0.6, 0.6, 0.6, 0.1])
    assert tp.indices == (0, 1, 4)


def test_short_series_rejected():
    with pytest.raises(ValueError):
        extract_turning_points([0.3])


def test_two_points_half_cycle():
    cs = rainflow_cycles(extract_turning_points([0.0, 1.0]))
    assert len(cs) == 1
    c = cs.cycles[0]
    assert (c.kind, c.range, c.direction) == ("half", 1.0, "charge")


def test_monotone_charging_no_discharge():
    k = battery_kpis([0.1, 0.3, 0.5, 0.9])
    assert k["avg_dod"] == 0.0
    assert k["avg_discharge_duration"] == 0.0


def test_single_discharge_cycle():
    k = battery_kpis([1.0, 0.4, 1.0])
    assert k["n_discharges"] == 1
    assert k["avg_dod"] == pytest.approx(0.6)
    assert k["avg_discharge_duration"] == 1


def test_csv_export(tmp_path):
    cs = rainflow_cycles(extract_turning_points(HISTORY))
    cs.to_csv(tmp_path / "cycles.csv")
    with open(tmp_path / "cycles.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert {r["direction"] for r in rows} == {"charge", "discharge"}


@given(series)
def test_turning_points_alternate(xs):
    tp = extract_turning_points(xs)
    assert tp.indices[0] == 0 and tp.indices[-1] == len(xs) - 1
    assert list(tp.indices) == sorted(set(tp.indices))
    d = np.diff(tp.values)
    interior = d[:-1] if len(d) > 1 else d
    signs = np.sign(interior[interior != 0])
    assert np.all(signs[1:] != signs[:-1])


@given(series)
def test_amplitude_bound(xs):
    cs = rainflow_cycles(extract_turning_points(xs))
    span = max(xs) - min(xs)
    assert all(0 <= c.range <= span for c in cs)


@given(series)
def test_full_cycles_counted_twice(xs):
    cs = rainflow_cycles(extract_turning_points(xs))
    rev = Counter(cs.reversals())
    full = Counter(c.range for c in cs if c.kind == "full")
    half = Counter(c.range for c in cs if c.kind == "half")
    for r in rev:
        assert rev[r] == 2 * full[r] + half[r]


@given(series, st.integers(-64, 64))
def test_translation_invariance(xs, k):
    shift = k / 64
    if min(xs) + shift < 0 or max(xs) + shift > 1:
        return
    a = rainflow_cycles(extract_turning_points(xs))
    b = rainflow_cycles(extract_turning_points([x + shift for x in xs]))
    assert [c.range for c in a] == [c.range for c in b]


@given(series)
def test_reflection_swaps_direction(xs):
    swap = {"charge": "discharge", "discharge": "charge"}
    a = rainflow_cycles(extract_turning_points(xs))
    b = rainflow_cycles(extract_turning_points([1.0 - x for x in xs]))
    assert sorted(c.range for c in a) == sorted(c.range for c in b)
    # a flat series yields a zero-range cycle with no meaningful direction
    assert sorted((c.range, c.direction) for c in a if c.range) == sorted(
        (c.range, swap[c.direction]) for c in b if c.range
    )
