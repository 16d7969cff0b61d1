"""District KPIs computed from an episode trace."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

KPI_KEYS = (
    "carbon_emissions",
    "discomfort_proportion",
    "cost",
    "ramping",
    "one_minus_load_factor_daily",
    "one_minus_load_factor_monthly",
    "daily_peak",
    "annual_peak",
    "one_minus_thermal_resilience",
    "unserved_energy",
    "zero_net_energy",
    "electricity_consumption",
)
RATIO_KPIS = (
    "carbon_emissions",
    "cost",
    "ramping",
    "one_minus_load_factor_daily",
    "one_minus_load_factor_monthly",
    "daily_peak",
    "annual_peak",
    "electricity_consumption",
)
MONTH_HOURS = 730


class KpiError(ValueError):
    pass


@dataclass
class EpisodeTrace:
    """Per-timestep record of one episode; building arrays have shape (T, n_buildings)."""

    net: np.ndarray  # district net consumption e(t), kWh
    carbon_intensity: np.ndarray
    price: np.ndarray
    indoor_temp: np.ndarray
    setpoint: np.ndarray
    occupants: np.ndarray
    outage: np.ndarray
    unserved: np.ndarray
    outage_demand: np.ndarray
    solar: np.ndarray
    elec_soc: np.ndarray  # fraction of capacity after each step
    dhw_soc: np.ndarray
    comfort_band: np.ndarray  # (n_buildings,)
    rewards: np.ndarray | None = None

    @property
    def T(self) -> int:
        return len(self.net)

    @classmethod
    def from_outcomes(cls, model, outcomes: Sequence) -> "EpisodeTrace":
        """Assemble a trace from consecutive ``StepOutcome`` objects of one episode."""
        if not outcomes:
            raise KpiError("empty trace")
        ts = np.array([o.t for o in outcomes])
        stack = lambda attr: np.stack([getattr(o.flows, attr) for o in outcomes])  # noqa: E731
        return cls(
            net=np.array([o.net_consumption for o in outcomes]),
            carbon_intensity=model.carbon[ts],
            price=model.price[ts],
            indoor_temp=np.stack([o.indoor_temp for o in outcomes]),
            setpoint=model.setpoint[ts],
            occupants=model.occupants[ts],
            outage=model.outage[ts],
            unserved=stack("unserved"),
            outage_demand=stack("outage_demand"),
            solar=model.solar[ts],
            elec_soc=np.stack([o.elec_soc_fraction for o in outcomes]),
            dhw_soc=np.stack([o.dhw_soc_fraction for o in outcomes]),
            comfort_band=model.comfort_band.copy(),
            rewards=np.array([o.reward for o in outcomes]),
        )


@dataclass
class KpiReport:
    carbon_emissions: float
    discomfort_proportion: float
    cost: float
    ramping: float
    one_minus_load_factor_daily: float
    one_minus_load_factor_monthly: float
    daily_peak: float
    annual_peak: float
    one_minus_thermal_resilience: float
    unserved_energy: float
    zero_net_energy: float
    electricity_consumption: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "KpiReport":
        return cls(**{f.name: float(d[f.name]) for f in fields(cls)})

    def scaled(self, c: float, keys: Sequence[str] = RATIO_KPIS) -> "KpiReport":
        d = self.as_dict()
        for k in keys:
            d[k] *= c
        return KpiReport(**d)


def _one_minus_load_factor(e_pos: np.ndarray, window: int) -> float:
    vals = []
    for start in range(0, len(e_pos), window):
        chunk = e_pos[start : start + window]
        peak = chunk.max()
        vals.append(0.0 if peak <= 0 else 1.0 - chunk.mean() / peak)
    return float(np.mean(vals))


def _masked_discomfort(trace: EpisodeTrace, during_outage: bool) -> float:
    uncomfortable = np.abs(trace.indoor_temp - trace.setpoint) > trace.comfort_band[None, :]
    window = (trace.occupants > 0) & (trace.outage == during_outage)
    per_building = []
    for b in range(trace.indoor_temp.shape[1]):
        n = window[:, b].sum()
        per_building.append(0.0 if n == 0 else (uncomfortable[:, b] & window[:, b]).sum() / n)
    return float(np.mean(per_building))


def compute_kpis(trace: EpisodeTrace) -> KpiReport:
    T = trace.T
    if T == 0:
        raise KpiError("empty trace")
    if T % 24:
        raise KpiError(f"trace length {T} is not a whole number of days")
    e = np.asarray(trace.net, dtype=float)
    e_pos = np.maximum(e, 0.0)
    daily = e_pos.reshape(-1, 24)
    outage_total = float(trace.outage_demand.sum())
    return KpiReport(
        carbon_emissions=float(e_pos @ trace.carbon_intensity),
        discomfort_proportion=_masked_discomfort(trace, during_outage=False),
        cost=float(e_pos @ trace.price),
        ramping=float(np.abs(np.diff(e)).sum() / (T - 1)) if T > 1 else 0.0,
        one_minus_load_factor_daily=_one_minus_load_factor(e_pos, 24),
        one_minus_load_factor_monthly=_one_minus_load_factor(e_pos, MONTH_HOURS),
        daily_peak=float(daily.max(axis=1).mean()),
        annual_peak=float(e_pos.max()),
        one_minus_thermal_resilience=_masked_discomfort(trace, during_outage=True),
        unserved_energy=0.0 if outage_total <= 0 else float(trace.unserved.sum() / outage_total),
        zero_net_energy=float(np.mean(e <= 0)),
        electricity_consumption=float(e_pos.sum()),
    )


def normalize_kpis(report: KpiReport, baseline: KpiReport) -> dict[str, float]:
    """Ratio KPIs divided by the baseline; proportions pass through.

    ``zero_net_energy`` is returned as ``1 - N`` so that every entry is
    lower-is-better.
    """
    out = {}
    r, b = report.as_dict(), baseline.as_dict()
    for key in KPI_KEYS:
        if key in RATIO_KPIS:
            if b[key] <= 0:
                raise KpiError(f"baseline KPI {key} is {b[key]}; cannot normalize")
            out[key] = r[key] / b[key]
        elif key == "zero_net_energy":
            out[key] = 1.0 - r[key]
        else:
            out[key] = r[key]
    return out


@dataclass(frozen=True)
class ScoreWeights:
    comfort: float = 0.3
    emissions: float = 0.1
    grid: float = 0.3
    resilience: float = 0.3
    grid_keys: tuple[str, ...] = ("ramping", "one_minus_load_factor_daily", "daily_peak", "annual_peak")
    resilience_keys: tuple[str, ...] = ("one_minus_thermal_resilience", "unserved_energy")


def average_score(normalized: dict[str, float], weights: ScoreWeights = ScoreWeights()) -> float:
    """Weighted leaderboard-style score of a normalized report; lower is better."""
    grid = np.mean([normalized[k] for k in weights.grid_keys])
    resilience = np.mean([normalized[k] for k in weights.resilience_keys])
    return float(
        weights.comfort * normalized["discomfort_proportion"]
        + weights.emissions * normalized["carbon_emissions"]
        + weights.grid * grid
        + weights.resilience * resilience
    )


def minmax_normalize_matrix(values) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise min-max scaling of an (algorithm x KPI) matrix.

    Returns the scaled matrix and a boolean flag per column marking constant
    columns, which are set to 0.5.
    """
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(axis=0), v.max(axis=0)
    span = hi - lo
    constant = span == 0
    out = np.where(constant, 0.5, (v - lo) / np.where(constant, 1.0, span))
    return out, constant
