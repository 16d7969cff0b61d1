"""Non-learning controllers: rule-based, random and no-control."""
from __future__ import annotations

import numpy as np

from ..data import ObservationSchema
from ..sim import ActionTriple


class Controller:
    """Maps observations of shape (..., n_agents, obs_dim) to actions (..., n_agents, 3)."""

    name = "controller"
    shared = True

    def reset(self, n_envs: int | None = None) -> None:
        pass

    def act(self, obs: np.ndarray, deterministic: bool = True, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        return self.act(obs, deterministic=True)


def rbc_act(
    hour: float,
    soc: float = 0.5,
    outage: bool = False,
    cooling_fraction: float = 0.0,
    charge_hours: tuple[int, int] = (1, 6),
    discharge_hours: tuple[int, int] = (18, 22),
    rate: float = 0.25,
) -> ActionTriple:
    """Charge storages at night, discharge in the evening peak, idle otherwise."""
    if not 1 <= hour <= 24:
        raise ValueError(f"hour must lie in [1, 24], got {hour}")
    cool = float(np.clip(cooling_fraction, 0.0, 1.0))
    if outage:
        return ActionTriple(0.5, 0.5, cool)
    if charge_hours[0] <= hour <= charge_hours[1]:
        s = 0.5 + rate
    elif discharge_hours[0] <= hour <= discharge_hours[1]:
        s = 0.5 - rate
    else:
        s = 0.5
    return ActionTriple(s, s, cool)


def _cooling_fraction(obs: np.ndarray, schema: ObservationSchema, nominal: np.ndarray) -> np.ndarray:
    demand = obs[..., schema.index("cooling_demand")]
    return np.clip(demand / nominal, 0.0, 1.0)


class RuleBasedController(Controller):
    name = "rbc"

    def __init__(self, schema: ObservationSchema, nominal_power, charge_hours=(1, 6), discharge_hours=(18, 22)):
        self.schema = schema
        self.nominal = np.asarray(nominal_power, dtype=float)
        self.charge_hours = charge_hours
        self.discharge_hours = discharge_hours

    def act(self, obs, deterministic=True, rng=None):
        obs = np.asarray(obs, dtype=float)
        hour = obs[..., self.schema.index("hour")]
        soc = obs[..., self.schema.index("electrical_storage_soc")]
        outage = obs[..., self.schema.index("power_outage")] > 0.5
        cool = _cooling_fraction(obs, self.schema, self.nominal)
        out = np.empty((*obs.shape[:-1], 3))
        for idx in np.ndindex(*obs.shape[:-1]):
            h = float(np.clip(np.round(hour[idx]), 1, 24))
            out[idx] = rbc_act(h, soc[idx], bool(outage[idx]), cool[idx], self.charge_hours, self.discharge_hours).as_array()
        return out


class RandomController(Controller):
    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def act(self, obs, deterministic=True, rng=None):
        rng = rng or self.rng
        return rng.random((*np.shape(obs)[:-1], 3))


class NoControlController(Controller):
    """Storages idle, cooling meets the building's cooling demand."""

    name = "no_control"

    def __init__(self, schema: ObservationSchema, nominal_power):
        self.schema = schema
        self.nominal = np.asarray(nominal_power, dtype=float)

    def act(self, obs, deterministic=True, rng=None):
        obs = np.asarray(obs, dtype=float)
        out = np.full((*obs.shape[:-1], 3), 0.5)
        out[..., 2] = _cooling_fraction(obs, self.schema, self.nominal)
        return out
