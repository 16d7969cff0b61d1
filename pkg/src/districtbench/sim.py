"""Discrete-time multi-building district simulator.

One agent per building. Each agent sends three actions in [0, 1]
(DHW storage, electrical storage, cooling device). All agents receive the
same district-level reward.

Step ledger (per building, hourly):

* DHW: the tank serves demand up to the discharge allowance of the DHW action;
  any shortfall is met by the heater, or left unserved during an outage.
* Battery: one-way efficiency ``sqrt(round_trip)`` on charge and on discharge.
* Cooling: first-order RC envelope, ``C dT/dt = (T_out - T_in)/R + q*occ - Q_cool``.
* Outage: no grid import or export. Solar feeds loads first, the battery covers
  the rest automatically, surplus solar charges the battery, the remainder is
  curtailed. Non-shiftable load is served before cooling.

Electric balance, exact per building and step::

    grid_import + solar_used + battery_to_load + unserved_electric
        == non_shiftable + cooling_electricity + heater_electricity + battery_charge_input
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .data import (
    BUILDING_COLUMNS,
    CARBON,
    DatasetBundle,
    ObservationSchema,
    PRICE,
    TEMPERATURE,
    BuildingParams,
)

DT = 1.0  # hours
N_ACTIONS = 3
DHW, ELEC, COOL = 0, 1, 2

DYNAMIC_FEATURES = (
    "indoor_dry_bulb_temperature",
    "dhw_storage_soc",
    "electrical_storage_soc",
    "net_electricity_consumption",
)


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 0.1  # discomfort
    beta: float = 0.1  # consumption
    gamma_w: float = 0.1  # ramping
    lambda_w: float = 0.1  # solar penalty

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma_w", "lambda_w"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"reward weight {name} must be finite and nonnegative")


@dataclass(frozen=True)
class SimConfig:
    initial_soc_fraction: float = 0.5
    soc_jitter: float = 0.0  # uniform +- jitter on the initial SoC fractions, drawn from the reset seed
    internal_gain_kw: float = 0.1  # per occupant
    obs_noise_std: float = 0.0


@dataclass(frozen=True)
class ActionTriple:
    dhw_storage: float
    electrical_storage: float
    cooling_device: float

    def as_array(self) -> np.ndarray:
        return np.clip(np.array([self.dhw_storage, self.electrical_storage, self.cooling_device], float), 0.0, 1.0)


@dataclass(frozen=True)
class Commands:
    battery_power: np.ndarray  # kW, >0 charges
    dhw_power: np.ndarray  # kW thermal, >0 charges
    cooling_power: np.ndarray  # kW thermal


def decode_action(actions, params: BuildingParams | list[BuildingParams]) -> Commands:
    """Map [0, 1] actions to physical set-points.

    ``f = (a - 0.5) / 0.5``: f > 0 charges and f < 0 discharges at ``|f|``
    of capacity per timestep; the battery is further capped by its power rating.
    """
    a = np.clip(np.atleast_2d(np.asarray(actions, dtype=float)), 0.0, 1.0)
    plist = [params] if isinstance(params, BuildingParams) else list(params)
    cap = np.array([p.battery_capacity for p in plist])
    pmax = np.array([p.battery_max_power for p in plist])
    dhw_cap = np.array([p.dhw_capacity for p in plist])
    nominal = np.array([p.cooling_nominal_power for p in plist])
    f_dhw = (a[:, DHW] - 0.5) / 0.5
    f_elec = (a[:, ELEC] - 0.5) / 0.5
    return Commands(
        battery_power=np.clip(f_elec * cap / DT, -pmax, pmax),
        dhw_power=f_dhw * dhw_cap / DT,
        cooling_power=a[:, COOL] * nominal,
    )


def compute_reward(d: float, e: float, r: float, s: float, weights: RewardWeights) -> float:
    return -(weights.alpha * d + weights.beta * e + weights.gamma_w * r + weights.lambda_w * s)


class DistrictModel:
    """Immutable per-district arrays shared by every state and clone."""

    def __init__(
        self,
        bundle: DatasetBundle,
        params: list[BuildingParams] | None = None,
        weights: RewardWeights = RewardWeights(),
        schema: ObservationSchema | None = None,
        config: SimConfig = SimConfig(),
    ):
        params = list(bundle.params if params is None else params)
        if len(params) != bundle.n_buildings:
            raise ValueError(f"got {len(params)} building parameter sets for {bundle.n_buildings} buildings")
        self.bundle = bundle
        self.params = params
        self.weights = weights
        self.schema = schema or ObservationSchema()
        self.config = config
        self.T = bundle.T
        self.n = bundle.n_buildings

        def vec(name):
            return np.array([getattr(p, name) for p in params], dtype=float)

        self.capacity = vec("battery_capacity")
        self.max_power = vec("battery_max_power")
        self.eta = np.sqrt(vec("battery_round_trip_efficiency"))
        self.dhw_capacity = vec("dhw_capacity")
        self.dhw_cop = vec("dhw_heater_cop")
        self.cooling_nominal = vec("cooling_nominal_power")
        self.cooling_cop = vec("cooling_cop")
        self.R = vec("thermal_resistance")
        self.C = vec("thermal_capacitance")
        self.comfort_band = vec("comfort_band")

        cols = {name: bundle.building_matrix(name) for name in BUILDING_COLUMNS}
        self.nsl = cols["non_shiftable_load"]
        self.solar = cols["solar_generation"]
        self.cooling_demand = cols["cooling_demand"]
        self.dhw_demand = cols["dhw_demand"]
        self.occupants = cols["occupant_count"]
        self.setpoint = cols["indoor_dry_bulb_temperature_set_point"]
        self.outage = cols["power_outage"] > 0.5
        self.outdoor = np.asarray(bundle.weather[TEMPERATURE])
        self.carbon = np.asarray(bundle.carbon_intensity)
        self.price = np.asarray(bundle.pricing[PRICE])

        t = np.arange(self.T)
        self.hour = (t % 24 + 1).astype(float)
        self.day_type = ((t // 24 + bundle.start_day_type - 1) % 7 + 1).astype(float)
        self._build_exogenous()

    def _exogenous_column(self, name: str) -> np.ndarray:
        b = self.bundle
        if name == "day_type":
            col = self.day_type
        elif name == "hour":
            col = self.hour
        elif name in b.weather:
            col = b.weather[name]
        elif name in b.pricing:
            col = b.pricing[name]
        elif name == CARBON:
            col = b.carbon_intensity
        elif name in BUILDING_COLUMNS:
            return b.building_matrix(name)
        else:
            raise KeyError(f"unknown observation feature {name!r}")
        return np.repeat(np.asarray(col)[:, None], self.n, axis=1)

    def _build_exogenous(self) -> None:
        feats = self.schema.features
        self.exogenous = np.zeros((self.T, self.n, len(feats)))
        self.dynamic_slots = {}
        for j, name in enumerate(feats):
            if name in DYNAMIC_FEATURES:
                self.dynamic_slots[name] = j
            else:
                self.exogenous[:, :, j] = self._exogenous_column(name)


@dataclass
class BuildingState:
    indoor_temp: float
    elec_soc: float  # kWh
    dhw_soc: float  # kWh


@dataclass
class DistrictState:
    model: DistrictModel
    t: int
    indoor_temp: np.ndarray
    elec_soc: np.ndarray
    dhw_soc: np.ndarray
    building_net: np.ndarray  # last step's net consumption per building
    prev_net: float | None  # district net consumption of the previous step
    rng: np.random.Generator

    @property
    def done(self) -> bool:
        return self.t >= self.model.T

    def building(self, i: int) -> BuildingState:
        return BuildingState(float(self.indoor_temp[i]), float(self.elec_soc[i]), float(self.dhw_soc[i]))


@dataclass
class BuildingFlows:
    """Per-building energy flows of one step, all arrays of shape (n_buildings,) in kWh."""

    grid_import: np.ndarray
    export: np.ndarray
    solar_used: np.ndarray
    battery_to_load: np.ndarray
    battery_charge_input: np.ndarray
    battery_delta: np.ndarray
    dhw_delta: np.ndarray
    dhw_tank_draw: np.ndarray
    dhw_charge: np.ndarray
    heater_thermal: np.ndarray
    heater_electricity: np.ndarray
    cooling_electricity: np.ndarray
    cooling_delivered: np.ndarray
    non_shiftable: np.ndarray
    unserved_electric: np.ndarray
    dhw_unserved: np.ndarray
    unserved: np.ndarray  # electric-equivalent unmet non-shiftable + DHW demand
    outage_demand: np.ndarray
    net: np.ndarray


@dataclass
class StepOutcome:
    observations: np.ndarray  # (n_agents, n_features) at the new time
    reward: float
    rewards: np.ndarray  # (n_agents,), identical entries
    flows: BuildingFlows
    net_consumption: float  # district, signed
    terms: dict = field(default_factory=dict)
    t: int = 0  # timestep that was simulated
    indoor_temp: np.ndarray | None = None  # after the step
    elec_soc_fraction: np.ndarray | None = None
    dhw_soc_fraction: np.ndarray | None = None
    done: bool = False


def reset(
    bundle_or_model: DatasetBundle | DistrictModel,
    params: list[BuildingParams] | None = None,
    weights: RewardWeights = RewardWeights(),
    seed: int = 0,
    schema: ObservationSchema | None = None,
    config: SimConfig = SimConfig(),
) -> tuple[DistrictState, np.ndarray]:
    if isinstance(bundle_or_model, DistrictModel):
        model = bundle_or_model
    else:
        model = DistrictModel(bundle_or_model, params, weights, schema, config)
    rng = np.random.default_rng(seed)
    cfg = model.config
    frac = np.full(model.n, cfg.initial_soc_fraction)
    frac_dhw = frac.copy()
    if cfg.soc_jitter > 0:
        frac = np.clip(frac + rng.uniform(-cfg.soc_jitter, cfg.soc_jitter, model.n), 0.0, 1.0)
        frac_dhw = np.clip(frac_dhw + rng.uniform(-cfg.soc_jitter, cfg.soc_jitter, model.n), 0.0, 1.0)
    state = DistrictState(
        model=model,
        t=0,
        indoor_temp=model.setpoint[0].copy(),
        elec_soc=frac * model.capacity,
        dhw_soc=frac_dhw * model.dhw_capacity,
        building_net=np.zeros(model.n),
        prev_net=None,
        rng=rng,
    )
    return state, observe(state)


def clone_state(state: DistrictState) -> DistrictState:
    return DistrictState(
        model=state.model,
        t=state.t,
        indoor_temp=state.indoor_temp.copy(),
        elec_soc=state.elec_soc.copy(),
        dhw_soc=state.dhw_soc.copy(),
        building_net=state.building_net.copy(),
        prev_net=state.prev_net,
        rng=copy.deepcopy(state.rng),
    )


def build_observation(state: DistrictState, building: int, t: int | None = None) -> np.ndarray:
    """Observation vector of one agent at time ``t`` (defaults to the state's clock)."""
    model = state.model
    t = state.t if t is None else t
    if not 0 <= t < model.T:
        raise SimulationError(f"observation requested at t={t}, horizon is {model.T}")
    obs = model.exogenous[t, building].copy()
    slots = model.dynamic_slots
    if "indoor_dry_bulb_temperature" in slots:
        obs[slots["indoor_dry_bulb_temperature"]] = state.indoor_temp[building]
    if "dhw_storage_soc" in slots:
        obs[slots["dhw_storage_soc"]] = state.dhw_soc[building] / model.dhw_capacity[building]
    if "electrical_storage_soc" in slots:
        obs[slots["electrical_storage_soc"]] = state.elec_soc[building] / model.capacity[building]
    if "net_electricity_consumption" in slots:
        obs[slots["net_electricity_consumption"]] = state.building_net[building]
    return obs


def observe(state: DistrictState) -> np.ndarray:
    """Observations of all agents, shape (n_agents, n_features).

    After the final step the last timestep's exogenous features are reused.
    """
    model = state.model
    t = min(state.t, model.T - 1)
    obs = model.exogenous[t].copy()
    slots = model.dynamic_slots
    for name, values in (
        ("indoor_dry_bulb_temperature", state.indoor_temp),
        ("dhw_storage_soc", state.dhw_soc / model.dhw_capacity),
        ("electrical_storage_soc", state.elec_soc / model.capacity),
        ("net_electricity_consumption", state.building_net),
    ):
        if name in slots:
            obs[:, slots[name]] = values
    if model.config.obs_noise_std > 0:
        obs = obs + state.rng.normal(0.0, model.config.obs_noise_std, obs.shape)
    return obs


def step(state: DistrictState, joint_action) -> StepOutcome:
    """Advance ``state`` in place by one hour."""
    m = state.model
    if state.done:
        raise SimulationError("step called after the episode is done")
    t = state.t
    a = np.clip(np.asarray(joint_action, dtype=float).reshape(m.n, N_ACTIONS), 0.0, 1.0)
    cmd = decode_action(a, m.params)
    outage = m.outage[t]
    normal = ~outage

    # (2) DHW tank
    dhw_demand = m.dhw_demand[t]
    allowance = np.where(outage, np.inf, np.maximum(-cmd.dhw_power * DT, 0.0))
    tank_draw = np.minimum(np.minimum(dhw_demand, state.dhw_soc), allowance)
    shortfall = dhw_demand - tank_draw
    heater_thermal = np.where(normal, shortfall, 0.0)
    dhw_unserved = np.where(outage, shortfall, 0.0)
    headroom = m.dhw_capacity - (state.dhw_soc - tank_draw)
    dhw_charge = np.where(normal, np.minimum(np.maximum(cmd.dhw_power * DT, 0.0), headroom), 0.0)
    heater_elec = (heater_thermal + dhw_charge) / m.dhw_cop
    dhw_soc_new = np.clip(state.dhw_soc - tank_draw + dhw_charge, 0.0, m.dhw_capacity)

    # (3) battery, commanded (normal operation)
    eta = m.eta
    soc = state.elec_soc
    stored = np.minimum(np.maximum(cmd.battery_power, 0.0) * DT * eta, m.capacity - soc)
    charge_input = stored / eta
    drawn = np.minimum(np.maximum(-cmd.battery_power, 0.0) * DT / eta, soc)
    delivered = drawn * eta

    # (4) cooling command
    cooling_thermal = cmd.cooling_power * DT
    cooling_elec = cooling_thermal / m.cooling_cop
    nsl = m.nsl[t]
    solar = m.solar[t]

    # (5) normal-mode balance
    demand_n = nsl + cooling_elec + heater_elec + charge_input
    solar_used_n = np.minimum(solar, demand_n)
    to_load_n = np.minimum(delivered, demand_n - solar_used_n)
    grid_n = demand_n - solar_used_n - to_load_n
    export_n = (solar - solar_used_n) + (delivered - to_load_n)

    # (6) outage: islanded, storages automatic
    load_o = nsl + cooling_elec
    solar_load_o = np.minimum(solar, load_o)
    deficit = load_o - solar_load_o
    drawn_o = np.minimum(np.minimum(deficit / eta, soc), m.max_power * DT / eta)
    delivered_o = drawn_o * eta
    surplus = solar - solar_load_o
    stored_o = np.minimum(np.minimum(surplus * eta, m.capacity - soc), m.max_power * DT * eta)
    charge_o = stored_o / eta
    served_o = solar_load_o + delivered_o
    nsl_served = np.minimum(nsl, served_o)
    cool_elec_served = served_o - nsl_served
    unserved_nsl = nsl - nsl_served
    unserved_cool = cooling_elec - cool_elec_served

    grid = np.where(outage, 0.0, grid_n)
    export = np.where(outage, 0.0, export_n)
    solar_used = np.where(outage, solar_load_o + charge_o, solar_used_n)
    to_load = np.where(outage, delivered_o, to_load_n)
    charge_in = np.where(outage, charge_o, charge_input)
    drawn_all = np.where(outage, drawn_o, drawn)
    stored_all = np.where(outage, stored_o, stored)
    unserved_elec = np.where(outage, unserved_nsl + unserved_cool, 0.0)
    cooling_delivered = np.where(outage, cool_elec_served * m.cooling_cop, cooling_thermal)
    heater_elec = np.where(outage, 0.0, heater_elec)

    soc_new = np.clip(soc + stored_all - drawn_all, 0.0, m.capacity)

    # cooling dynamics
    occ = m.occupants[t]
    T_in = state.indoor_temp
    gain = (m.outdoor[t] - T_in) / m.R + m.config.internal_gain_kw * occ - cooling_delivered / DT
    T_new = T_in + DT / m.C * gain

    net = grid - export
    district_net = float(net.sum())
    unserved = np.where(outage, unserved_nsl + dhw_unserved / m.dhw_cop, 0.0)
    outage_demand = np.where(outage, nsl + dhw_demand / m.dhw_cop, 0.0)

    # (7) reward
    d = float(np.maximum(np.abs(T_new - m.setpoint[t]) - m.comfort_band, 0.0).sum())
    e = max(0.0, district_net)
    r = 0.0 if state.prev_net is None else abs(e - max(0.0, state.prev_net))
    s = max(0.0, float(grid.sum() - solar.sum()))
    reward = compute_reward(d, e, r, s, m.weights)

    flows = BuildingFlows(
        grid_import=grid,
        export=export,
        solar_used=solar_used,
        battery_to_load=to_load,
        battery_charge_input=charge_in,
        battery_delta=soc_new - soc,
        dhw_delta=dhw_soc_new - state.dhw_soc,
        dhw_tank_draw=tank_draw,
        dhw_charge=dhw_charge,
        heater_thermal=heater_thermal,
        heater_electricity=heater_elec,
        cooling_electricity=cooling_elec,
        cooling_delivered=cooling_delivered,
        non_shiftable=nsl.copy(),
        unserved_electric=unserved_elec,
        dhw_unserved=dhw_unserved,
        unserved=unserved,
        outage_demand=outage_demand,
        net=net,
    )

    state.indoor_temp = T_new
    state.elec_soc = soc_new
    state.dhw_soc = dhw_soc_new
    state.building_net = net
    state.prev_net = district_net
    state.t = t + 1

    return StepOutcome(
        observations=observe(state),
        reward=reward,
        rewards=np.full(m.n, reward),
        flows=flows,
        net_consumption=district_net,
        terms={"d": d, "e": e, "r": r, "s": s},
        t=t,
        indoor_temp=T_new.copy(),
        elec_soc_fraction=soc_new / m.capacity,
        dhw_soc_fraction=dhw_soc_new / m.dhw_capacity,
        done=state.done,
    )


class DistrictEnv:
    """Gym-style wrapper: ``reset(seed)``, ``step(actions)``, ``clone()``."""

    def __init__(self, model: DistrictModel):
        self.model = model
        self.state: DistrictState | None = None
        self._obs: np.ndarray | None = None  # latest observation; re-reading it draws no noise

    @classmethod
    def from_bundle(cls, bundle: DatasetBundle, **kwargs) -> "DistrictEnv":
        return cls(DistrictModel(bundle, **kwargs))

    @property
    def n_agents(self) -> int:
        return self.model.n

    @property
    def obs_dim(self) -> int:
        return len(self.model.schema)

    def reset(self, seed: int = 0) -> np.ndarray:
        self.state, self._obs = reset(self.model, seed=seed)
        return self._obs.copy()

    def step(self, actions) -> StepOutcome:
        out = step(self.state, actions)
        self._obs = out.observations
        return out

    def observe(self) -> np.ndarray:
        return self._obs.copy()

    def clone(self) -> "DistrictEnv":
        other = type(self)(self.model)
        other.state = clone_state(self.state)
        other._obs = self._obs
        return other

    @property
    def done(self) -> bool:
        return self.state.done
