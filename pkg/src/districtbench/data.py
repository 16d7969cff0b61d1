"""Dataset files driving the district simulator.

On-disk layout of a dataset directory::

    schema.txt             INI-style descriptor: building count, device parameters
    weather.csv            outdoor temperature and irradiances (+ 6/12/24 h forecasts)
    pricing.csv            electricity price (+ forecasts)
    carbon_intensity.csv   grid carbon intensity
    building_<i>.csv       per-building demand, generation, occupancy, outage

All CSV files carry a header row and hourly rows.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

FORECAST_LEADS = (6, 12, 24)

TEMPERATURE = "outdoor_dry_bulb_temperature"
DIFFUSE = "diffuse_solar_irradiance"
DIRECT = "direct_solar_irradiance"
PRICE = "electricity_pricing"
CARBON = "carbon_intensity"

WEATHER_BASE = (TEMPERATURE, DIFFUSE, DIRECT)
BUILDING_COLUMNS = (
    "non_shiftable_load",
    "solar_generation",
    "cooling_demand",
    "dhw_demand",
    "occupant_count",
    "indoor_dry_bulb_temperature_set_point",
    "power_outage",
)


def forecast_name(base: str, lead: int) -> str:
    return f"{base}_predicted_{lead}h"


def _with_forecasts(bases: Iterable[str]) -> tuple[str, ...]:
    out = []
    for base in bases:
        out.append(base)
        out.extend(forecast_name(base, h) for h in FORECAST_LEADS)
    return tuple(out)


WEATHER_COLUMNS = _with_forecasts(WEATHER_BASE)
PRICING_COLUMNS = _with_forecasts((PRICE,))
CARBON_COLUMNS = (CARBON,)

_BASE_UNITS = {
    TEMPERATURE: "°C",
    DIFFUSE: "W/m²",
    DIRECT: "W/m²",
    PRICE: "$/kWh",
    CARBON: "kgCO2e/kWh",
    "non_shiftable_load": "kWh",
    "solar_generation": "kWh",
    "cooling_demand": "kWh",
    "dhw_demand": "kWh",
    "occupant_count": "count",
    "indoor_dry_bulb_temperature_set_point": "°C",
    "power_outage": "flag",
}
UNITS: dict[str, str] = dict(_BASE_UNITS)
for _base in WEATHER_BASE + (PRICE,):
    for _h in FORECAST_LEADS:
        UNITS[forecast_name(_base, _h)] = _BASE_UNITS[_base]

# Columns whose values may not go below zero.
NONNEGATIVE = frozenset(
    name for name, unit in UNITS.items() if unit in {"W/m²", "$/kWh", "kgCO2e/kWh", "kWh", "count", "flag"}
)


class DatasetError(ValueError):
    """Raised for missing, malformed or inconsistent dataset files."""


@dataclass(frozen=True)
class TimeSeriesColumn:
    name: str
    unit: str
    values: np.ndarray

    def __post_init__(self):
        expected = UNITS.get(self.name)
        if expected is not None and expected != self.unit:
            raise DatasetError(f"column {self.name!r} must be in {expected}, got {self.unit}")
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise DatasetError(f"column {self.name!r} has missing or non-finite entries")
        if self.unit == "flag" and not np.all((values == 0) | (values == 1)):
            raise DatasetError(f"flag column {self.name!r} must contain only 0/1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class BuildingParams:
    """Device and envelope parameters of one building."""

    battery_capacity: float = 6.4  # kWh
    battery_max_power: float = 5.0  # kW
    battery_round_trip_efficiency: float = 0.9
    dhw_capacity: float = 3.0  # kWh thermal
    dhw_heater_cop: float = 0.95
    cooling_nominal_power: float = 5.0  # kW thermal
    cooling_cop: float = 3.0
    thermal_resistance: float = 5.0  # °C/kW
    thermal_capacitance: float = 3.0  # kWh/°C
    comfort_band: float = 1.0  # °C
    pv_capacity: float = 4.0  # kW peak, used by the synthetic generator only

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite")
            if f.name == "comfort_band":
                if v < 0:
                    raise ValueError("comfort_band must be >= 0")
            elif v <= 0:
                raise ValueError(f"{f.name} must be strictly positive, got {v}")
        if self.battery_round_trip_efficiency > 1:
            raise ValueError("battery_round_trip_efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class DatasetBundle:
    """Aligned hourly series for one district. Arrays are read-only."""

    weather: Mapping[str, np.ndarray]
    pricing: Mapping[str, np.ndarray]
    carbon_intensity: np.ndarray
    buildings: tuple[Mapping[str, np.ndarray], ...]
    params: tuple[BuildingParams, ...]
    start_day_type: int = 1
    forecast_noise_std: float = 0.0

    def __post_init__(self):
        freeze = lambda d: {k: _readonly(v) for k, v in d.items()}  # noqa: E731
        object.__setattr__(self, "weather", freeze(self.weather))
        object.__setattr__(self, "pricing", freeze(self.pricing))
        object.__setattr__(self, "carbon_intensity", _readonly(self.carbon_intensity))
        object.__setattr__(self, "buildings", tuple(freeze(b) for b in self.buildings))
        object.__setattr__(self, "params", tuple(self.params))
        validate_bundle(self)

    @property
    def T(self) -> int:
        return len(self.carbon_intensity)

    @property
    def n_buildings(self) -> int:
        return len(self.buildings)

    def building_matrix(self, column: str) -> np.ndarray:
        """``column`` stacked over buildings, shape (T, n_buildings)."""
        return np.stack([b[column] for b in self.buildings], axis=1)

    def select_buildings(self, indices: Sequence[int]) -> "DatasetBundle":
        return replace(
            self,
            buildings=tuple(self.buildings[i] for i in indices),
            params=tuple(self.params[i] for i in indices),
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.weather):
            h.update(name.encode())
            h.update(self.weather[name].tobytes())
        for name in sorted(self.pricing):
            h.update(self.pricing[name].tobytes())
        h.update(self.carbon_intensity.tobytes())
        for b, p in zip(self.buildings, self.params):
            for name in BUILDING_COLUMNS:
                h.update(b[name].tobytes())
            h.update(repr(asdict(p)).encode())
        return h.hexdigest()[:16]


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def shift_forecast(base: np.ndarray, lead: int) -> np.ndarray:
    """Perfect-foresight forecast: ``f_h[t] = f[min(t + h, T - 1)]``."""
    T = len(base)
    idx = np.minimum(np.arange(T) + lead, T - 1)
    return np.asarray(base)[idx]


def validate_bundle(bundle: DatasetBundle) -> None:
    T = bundle.T
    if T == 0:
        raise DatasetError("empty dataset")
    groups = [("weather.csv", bundle.weather, WEATHER_COLUMNS), ("pricing.csv", bundle.pricing, PRICING_COLUMNS)]
    groups += [(f"building_{i + 1}.csv", b, BUILDING_COLUMNS) for i, b in enumerate(bundle.buildings)]
    for fname, table, required in groups:
        for name in required:
            if name not in table:
                raise DatasetError(f"{fname}: missing column {name!r}")
            TimeSeriesColumn(name, UNITS[name], table[name])
            if len(table[name]) != T:
                raise DatasetError(f"{fname}: column {name!r} has length {len(table[name])}, expected {T}")
            if name in NONNEGATIVE and np.any(table[name] < 0):
                raise DatasetError(f"{fname}: column {name!r} has negative entries")
    TimeSeriesColumn(CARBON, UNITS[CARBON], bundle.carbon_intensity)
    if np.any(bundle.carbon_intensity < 0):
        raise DatasetError("carbon_intensity.csv: negative carbon intensity")
    if len(bundle.params) != len(bundle.buildings):
        raise DatasetError("building parameter count does not match building file count")
    if not bundle.buildings:
        raise DatasetError("dataset has no buildings")
    if bundle.forecast_noise_std == 0.0:
        for table, bases in ((bundle.weather, WEATHER_BASE), (bundle.pricing, (PRICE,))):
            for base in bases:
                for h in FORECAST_LEADS:
                    if not np.allclose(table[forecast_name(base, h)], shift_forecast(table[base], h), atol=1e-9):
                        raise DatasetError(f"forecast column {forecast_name(base, h)!r} is not the shifted base column")


# ---------------------------------------------------------------------------
# CSV I/O


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    if not path.exists():
        raise DatasetError(f"missing file {path.name!r}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path.name}: empty file") from None
        columns: list[list[float]] = [[] for _ in header]
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            for col, cell in enumerate(row):
                if col >= len(header):
                    raise DatasetError(f"{path.name}: row {row_no} has more cells than the header")
                if cell.strip() == "":
                    continue
                try:
                    columns[col].append(float(cell))
                except ValueError:
                    raise DatasetError(
                        f"{path.name}: unparseable cell {cell!r} at row {row_no}, column {header[col]!r}"
                    ) from None
    return {name: np.asarray(vals, dtype=float) for name, vals in zip(header, columns)}


def _check_lengths(fname: str, table: Mapping[str, np.ndarray], T: int | None) -> int:
    for name, values in table.items():
        if T is None:
            T = len(values)
        elif len(values) != T:
            raise DatasetError(f"{fname}: length mismatch in column {name!r} ({len(values)} rows, expected {T})")
    return T


def load_dataset(root: str | Path) -> DatasetBundle:
    root = Path(root)
    weather = _read_csv(root / "weather.csv")
    pricing = _read_csv(root / "pricing.csv")
    carbon = _read_csv(root / "carbon_intensity.csv")
    schema_path = root / "schema.txt"
    if not schema_path.exists():
        raise DatasetError("missing file 'schema.txt'")
    schema = configparser.ConfigParser()
    schema.read(schema_path)

    building_files = sorted(root.glob("building_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    n_declared = schema.getint("district", "n_buildings", fallback=len(building_files))
    if len(building_files) != n_declared:
        raise DatasetError(f"schema declares {n_declared} buildings, found {len(building_files)} building files")
    if not building_files:
        raise DatasetError("missing file 'building_1.csv'")

    T = _check_lengths("weather.csv", weather, None)
    _check_lengths("pricing.csv", pricing, T)
    _check_lengths("carbon_intensity.csv", carbon, T)
    buildings, params = [], []
    for i, path in enumerate(building_files, start=1):
        table = _read_csv(path)
        _check_lengths(path.name, table, T)
        buildings.append(table)
        section = f"building_{i}"
        kwargs = {}
        if schema.has_section(section):
            for f in fields(BuildingParams):
                if schema.has_option(section, f.name):
                    kwargs[f.name] = schema.getfloat(section, f.name)
        params.append(BuildingParams(**kwargs))
    if CARBON not in carbon:
        raise DatasetError(f"carbon_intensity.csv: missing column {CARBON!r}")
    return DatasetBundle(
        weather=weather,
        pricing=pricing,
        carbon_intensity=carbon[CARBON],
        buildings=tuple(buildings),
        params=tuple(params),
        start_day_type=schema.getint("district", "start_day_type", fallback=1),
        forecast_noise_std=schema.getfloat("district", "forecast_noise_std", fallback=0.0),
    )


def _write_csv(path: Path, table: Mapping[str, np.ndarray], columns: Sequence[str]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in zip(*(table[c] for c in columns)):
            writer.writerow([repr(float(v)) for v in row])


def write_dataset(bundle: DatasetBundle, root: str | Path) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    _write_csv(root / "weather.csv", bundle.weather, WEATHER_COLUMNS)
    _write_csv(root / "pricing.csv", bundle.pricing, PRICING_COLUMNS)
    _write_csv(root / "carbon_intensity.csv", {CARBON: bundle.carbon_intensity}, CARBON_COLUMNS)
    for i, b in enumerate(bundle.buildings, start=1):
        _write_csv(root / f"building_{i}.csv", b, BUILDING_COLUMNS)
    schema = configparser.ConfigParser()
    schema["district"] = {
        "n_buildings": str(bundle.n_buildings),
        "timesteps": str(bundle.T),
        "start_day_type": str(bundle.start_day_type),
        "forecast_noise_std": repr(bundle.forecast_noise_std),
    }
    for i, p in enumerate(bundle.params, start=1):
        schema[f"building_{i}"] = {k: repr(v) for k, v in asdict(p).items()}
    with (root / "schema.txt").open("w") as fh:
        schema.write(fh)
    return root


# ---------------------------------------------------------------------------
# Synthetic district


def generate_synthetic_dataset(
    seed: int,
    n_buildings: int,
    T: int,
    forecast_noise_std: float = 0.0,
    params: Sequence[BuildingParams] | None = None,
) -> DatasetBundle:
    """Deterministic summer-like district with diurnal weather and TOU prices.

    Every building gets at least one contiguous outage window. Cooling demand is
    the heat gain at setpoint under the building's own envelope, so a controller
    that cools exactly to demand holds the setpoint.
    """
    if n_buildings < 1:
        raise ValueError("n_buildings must be >= 1")
    if T < 48:
        raise ValueError("T must be >= 48 (two days) for daily KPIs")
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    hour = t % 24
    n_days = (T + 23) // 24

    day_temp = rng.normal(0.0, 1.5, n_days)[t // 24]
    temp = 28.0 + 6.0 * np.sin(2 * np.pi * (hour - 9) / 24) + day_temp + rng.normal(0.0, 0.3, T)
    sun = np.clip(np.sin(np.pi * (hour - 6) / 12), 0.0, None)
    sun[(hour < 7) | (hour > 17)] = 0.0
    clouds = rng.uniform(0.4, 1.0, n_days)[t // 24]
    direct = 850.0 * sun * clouds
    diffuse = 120.0 * sun * (1.3 - clouds)

    price = np.full(T, 0.22)
    price[(hour >= 0) & (hour < 6)] = 0.12
    price[(hour >= 16) & (hour < 21)] = 0.40
    carbon = np.clip(0.42 + 0.08 * np.sin(2 * np.pi * (hour - 15) / 24) + rng.normal(0, 0.02, T), 0.05, None)

    noise = (lambda n: rng.normal(0.0, forecast_noise_std, n)) if forecast_noise_std > 0 else (lambda n: 0.0)
    weather = {}
    for name, base in ((TEMPERATURE, temp), (DIFFUSE, diffuse), (DIRECT, direct)):
        weather[name] = base
        for h in FORECAST_LEADS:
            fc = shift_forecast(base, h) + noise(T)
            weather[forecast_name(name, h)] = fc if name == TEMPERATURE else np.clip(fc, 0.0, None)
    pricing = {PRICE: price}
    for h in FORECAST_LEADS:
        pricing[forecast_name(PRICE, h)] = np.clip(shift_forecast(price, h) + noise(T), 0.0, None)

    start_day_type = int(rng.integers(1, 8))
    day_type = (t // 24 + start_day_type - 1) % 7 + 1
    weekend = day_type >= 6

    if params is None:
        params = [
            BuildingParams(
                battery_capacity=float(rng.choice([4.0, 6.4, 8.0])),
                thermal_resistance=float(rng.uniform(4.0, 6.0)),
                thermal_capacitance=float(rng.uniform(2.5, 3.5)),
                pv_capacity=float(rng.uniform(3.0, 5.0)),
            )
            for _ in range(n_buildings)
        ]
    elif len(params) != n_buildings:
        raise ValueError("params must have one entry per building")

    buildings = []
    for p in params:
        residents = int(rng.integers(2, 6))
        home = (hour < 8) | (hour >= 17) | weekend
        occupants = np.where(home, residents, (rng.random(T) < 0.15) * residents).astype(float)
        setpoint = np.full(T, float(np.round(rng.uniform(23.0, 25.0), 1)))
        nsl = 0.35 + 0.12 * occupants + 0.25 * np.clip(np.sin(np.pi * (hour - 16) / 8), 0, None)
        nsl = np.clip(nsl + rng.normal(0.0, 0.05, T), 0.05, None)
        dhw_peak = np.exp(-0.5 * ((hour - 7) / 1.0) ** 2) + np.exp(-0.5 * ((hour - 20) / 1.5) ** 2)
        dhw = np.clip(0.4 * dhw_peak * occupants / 3.0 + rng.normal(0, 0.02, T), 0.0, None)
        solar = p.pv_capacity * (direct + diffuse) / 1000.0 * 0.85
        solar[direct == 0.0] = 0.0
        gain = (temp - setpoint) / p.thermal_resistance + 0.1 * occupants
        cooling = np.clip(gain, 0.0, None)
        outage = np.zeros(T)
        n_windows = 1 if T < 24 * 14 else 2
        for _ in range(n_windows):
            length = int(rng.integers(2, 7))
            start = int(rng.integers(0, T - length))
            outage[start : start + length] = 1.0
        buildings.append(
            {
                "non_shiftable_load": nsl,
                "solar_generation": solar,
                "cooling_demand": cooling,
                "dhw_demand": dhw,
                "occupant_count": occupants,
                "indoor_dry_bulb_temperature_set_point": setpoint,
                "power_outage": outage,
            }
        )
    return DatasetBundle(
        weather=weather,
        pricing=pricing,
        carbon_intensity=carbon,
        buildings=tuple(buildings),
        params=tuple(params),
        start_day_type=start_day_type,
        forecast_noise_std=float(forecast_noise_std),
    )


def bundles_equal(a: DatasetBundle, b: DatasetBundle, atol: float = 0.0) -> bool:
    if a.T != b.T or a.n_buildings != b.n_buildings or a.params != b.params:
        return False
    pairs = [(a.weather, b.weather), (a.pricing, b.pricing)] + list(zip(a.buildings, b.buildings))
    for x, y in pairs:
        if set(x) != set(y) or not all(np.allclose(x[k], y[k], rtol=0, atol=atol) for k in x):
            return False
    return bool(np.allclose(a.carbon_intensity, b.carbon_intensity, rtol=0, atol=atol))


# ---------------------------------------------------------------------------
# Observation schema

DEFAULT_FEATURES: tuple[str, ...] = (
    ("day_type", "hour")
    + WEATHER_COLUMNS
    + (
        CARBON,
        "indoor_dry_bulb_temperature",
        "non_shiftable_load",
        "solar_generation",
        "dhw_storage_soc",
        "electrical_storage_soc",
        "net_electricity_consumption",
    )
    + PRICING_COLUMNS
    + (
        "cooling_demand",
        "dhw_demand",
        "occupant_count",
        "indoor_dry_bulb_temperature_set_point",
        "power_outage",
    )
)


@dataclass(frozen=True)
class ObservationSchema:
    features: tuple[str, ...] = field(default=DEFAULT_FEATURES)

    def __len__(self) -> int:
        return len(self.features)

    def index(self, name: str) -> int:
        return self.features.index(name)

    def digest(self) -> str:
        return hashlib.sha256(",".join(self.features).encode()).hexdigest()[:12]


def mask_forecast_features(
    bundle_or_schema: DatasetBundle | ObservationSchema | None, leads: Iterable[int]
) -> ObservationSchema:
    """Drop outdoor-temperature and price forecasts at ``leads`` hours."""
    leads = set(int(h) for h in leads)
    if not leads <= set(FORECAST_LEADS):
        raise ValueError(f"forecast leads must be a subset of {FORECAST_LEADS}, got {sorted(leads)}")
    schema = bundle_or_schema if isinstance(bundle_or_schema, ObservationSchema) else ObservationSchema()
    drop = {forecast_name(base, h) for base in (TEMPERATURE, PRICE) for h in leads}
    return ObservationSchema(tuple(f for f in schema.features if f not in drop))
