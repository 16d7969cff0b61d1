from __future__ import annotations

from collections import OrderedDict
from dataclasses import replace

import numpy as np
import pytest

from districtbench.data import BUILDING_COLUMNS, BuildingParams, generate_synthetic_dataset

CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: long-running training test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = CRITERIA.setdefault(number, {"title": title, "passed": True, "tests": 0, "failures": []})
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry["tests"] += 1
        if not rep.passed:
            entry["passed"] = False
            entry["failures"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        e = CRITERIA[number]
        status = "PASS" if e["passed"] else "FAIL"
        extra = "" if e["passed"] else f"  (failed: {', '.join(e['failures'])})"
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {e['title']} ({e['tests']} checks){extra}")


def flat_bundle(T: int = 48, n: int = 1, params: BuildingParams | None = None, **columns):
    """Synthetic bundle with every building column overwritten by constants or arrays.

    Unlisted building columns are zero, except the setpoint (24 °C).
    """
    base = generate_synthetic_dataset(0, n, T)
    defaults = {name: 0.0 for name in BUILDING_COLUMNS}
    defaults["indoor_dry_bulb_temperature_set_point"] = 24.0
    defaults.update(columns)
    buildings = []
    for _ in range(n):
        buildings.append({k: np.broadcast_to(np.asarray(v, dtype=float), (T,)).copy() for k, v in defaults.items()})
    p = params or BuildingParams()
    return replace(base, buildings=tuple(buildings), params=tuple([p] * n))


@pytest.fixture
def district2():
    return generate_synthetic_dataset(3, 2, 168)


@pytest.fixture
def district3():
    return generate_synthetic_dataset(5, 3, 96)
