"""Rainflow depth-of-discharge metrics for storage SoC series.

Interior closed loops are extracted with the usual three-point stack rule.
What is left (the residue, a sequence of ever-growing then ever-shrinking
reversals) is paired consecutively: (r0, r1), (r2, r3), ... each form a full
cycle, and a trailing unpaired point closes a half cycle with its predecessor.
On the textbook history 10, 50, 30, 80, 20, 60, 40, 70 this yields the cycles
A-D (70), B-C (20), E-H (50), F-G (20); the ASTM residue rule would instead
count half cycles of 70, 60 and 50. A two-point history is a single half cycle.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TurningPointSeries:
    indices: tuple[int, ...]
    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class RainflowCycle:
    from_index: int
    to_index: int
    from_value: float
    to_value: float
    kind: str  # "full" | "half"

    @property
    def range(self) -> float:
        return abs(self.to_value - self.from_value)

    @property
    def direction(self) -> str:
        return "discharge" if self.to_value < self.from_value else "charge"

    @property
    def duration(self) -> int:
        return self.to_index - self.from_index


@dataclass(frozen=True)
class CycleSet:
    cycles: tuple[RainflowCycle, ...]

    def __iter__(self):
        return iter(self.cycles)

    def __len__(self) -> int:
        return len(self.cycles)

    def reversals(self) -> list[float]:
        """Reversal ranges: two per full cycle (one each way), one per half cycle."""
        out = []
        for c in self.cycles:
            out.extend([c.range] * (2 if c.kind == "full" else 1))
        return out

    def discharges(self) -> list[RainflowCycle]:
        return [c for c in self.cycles if c.direction == "discharge"]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["from_index", "to_index", "from_value", "to_value", "range", "kind", "direction"])
            for c in self.cycles:
                w.writerow([c.from_index, c.to_index, c.from_value, c.to_value, c.range, c.kind, c.direction])


def extract_turning_points(soc: Sequence[float]) -> TurningPointSeries:
    """Local extrema of ``soc``; plateaus collapse onto their first index.

    The first and last samples are always kept.
    """
    x = np.asarray(soc, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("need a 1-D series of at least two samples")
    idx = [0]
    direction = 0  # +1 rising, -1 falling, 0 unknown
    for i in range(1, len(x)):
        diff = x[i] - x[idx[-1]] if direction == 0 else x[i] - x[i - 1]
        if diff == 0:
            continue
        d = 1 if diff > 0 else -1
        if direction == 0:
            direction = d
        elif d != direction:
            # the extremum is the first sample of the plateau that ended at i - 1
            j = i - 1
            while j > idx[-1] and x[j - 1] == x[j]:
                j -= 1
            idx.append(j)
            direction = d
    if idx[-1] != len(x) - 1:
        idx.append(len(x) - 1)
    return TurningPointSeries(tuple(idx), tuple(float(x[i]) for i in idx))


def rainflow_cycles(tp: TurningPointSeries) -> CycleSet:
    points = list(zip(tp.indices, tp.values))
    cycles: list[RainflowCycle] = []
    stack: list[tuple[int, float]] = []
    for p in points:
        stack.append(p)
        while len(stack) >= 4:
            x = abs(stack[-1][1] - stack[-2][1])
            y = abs(stack[-2][1] - stack[-3][1])
            if x < y:
                break
            (i0, v0), (i1, v1) = stack[-3], stack[-2]
            cycles.append(RainflowCycle(i0, i1, v0, v1, "full"))
            del stack[-3:-1]
    residue = stack
    if len(residue) == 2:
        (i0, v0), (i1, v1) = residue
        cycles.append(RainflowCycle(i0, i1, v0, v1, "half"))
    else:
        for k in range(0, len(residue) - 1, 2):
            (i0, v0), (i1, v1) = residue[k], residue[k + 1]
            cycles.append(RainflowCycle(i0, i1, v0, v1, "full"))
        if len(residue) % 2 == 1 and len(residue) > 1:
            (i0, v0), (i1, v1) = residue[-2], residue[-1]
            cycles.append(RainflowCycle(i0, i1, v0, v1, "half"))
    cycles.sort(key=lambda c: (c.from_index, c.to_index))
    return CycleSet(tuple(cycles))


def battery_kpis(soc: Sequence[float], capacity: float = 1.0) -> dict[str, float]:
    """Average depth of discharge (fraction of capacity) and discharge duration (timesteps).

    ``soc`` is a series of fractions; ``capacity`` only scales ``avg_dod_kwh``.
    """
    cs = rainflow_cycles(extract_turning_points(soc))
    dis = cs.discharges()
    if not dis:
        return {"avg_dod": 0.0, "avg_discharge_duration": 0.0, "avg_dod_kwh": 0.0, "n_discharges": 0}
    dod = float(np.mean([c.range for c in dis]))
    return {
        "avg_dod": dod,
        "avg_discharge_duration": float(np.mean([c.duration for c in dis])),
        "avg_dod_kwh": dod * capacity,
        "n_discharges": len(dis),
    }
