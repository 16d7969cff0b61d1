import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from districtbench.data import (
    BUILDING_COLUMNS,
    FORECAST_LEADS,
    PRICE,
    TEMPERATURE,
    WEATHER_BASE,
    DatasetError,
    ObservationSchema,
    TimeSeriesColumn,
    bundles_equal,
    forecast_name,
    generate_synthetic_dataset,
    load_dataset,
    mask_forecast_features,
    shift_forecast,
    write_dataset,
)


def test_round_trip_three_buildings(tmp_path):
    bundle = generate_synthetic_dataset(11, 3, 2160)
    write_dataset(bundle, tmp_path)
    loaded = load_dataset(tmp_path)
    assert loaded.n_buildings == 3
    assert loaded.T == 2160
    assert bundles_equal(bundle, loaded, atol=1e-9)
    assert loaded.params == bundle.params
    assert loaded.start_day_type == bundle.start_day_type


def test_rewrite_is_byte_identical(tmp_path):
    bundle = generate_synthetic_dataset(2, 2, 72)
    write_dataset(bundle, tmp_path / "a")
    write_dataset(load_dataset(tmp_path / "a"), tmp_path / "b")
    for name in ("weather.csv", "pricing.csv", "carbon_intensity.csv", "building_1.csv", "building_2.csv", "schema.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_directory_names_weather(tmp_path):
    with pytest.raises(DatasetError, match="weather.csv"):
        load_dataset(tmp_path)


def _rewrite_column(path, column, transform):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    j = rows[0].index(column)
    for i, row in enumerate(rows[1:], start=1):
        row[j] = transform(i, row[j])
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def test_short_column_reports_length_mismatch(tmp_path):
    write_dataset(generate_synthetic_dataset(0, 2, 48), tmp_path)
    _rewrite_column(tmp_path / "building_2.csv", "dhw_demand", lambda i, v: "" if i == 48 else v)
    with pytest.raises(DatasetError, match="building_2.csv.*dhw_demand"):
        load_dataset(tmp_path)


def test_unparseable_cell_reports_location(tmp_path):
    write_dataset(generate_synthetic_dataset(0, 1, 48), tmp_path)
    _rewrite_column(tmp_path / "pricing.csv", PRICE, lambda i, v: "abc" if i == 5 else v)
    with pytest.raises(DatasetError, match=r"pricing.csv.*row 6.*electricity_pricing"):
        load_dataset(tmp_path)


def test_negative_load_rejected(tmp_path):
    write_dataset(generate_synthetic_dataset(0, 1, 48), tmp_path)
    _rewrite_column(tmp_path / "building_1.csv", "non_shiftable_load", lambda i, v: "-1.0" if i == 3 else v)
    with pytest.raises(DatasetError, match="negative"):
        load_dataset(tmp_path)


def test_negative_price_rejected(tmp_path):
    write_dataset(generate_synthetic_dataset(0, 1, 48), tmp_path)
    for col in [PRICE] + [forecast_name(PRICE, h) for h in FORECAST_LEADS]:
        _rewrite_column(tmp_path / "pricing.csv", col, lambda i, v: repr(-float(v)))
    with pytest.raises(DatasetError, match="negative"):
        load_dataset(tmp_path)


def test_missing_building_file(tmp_path):
    write_dataset(generate_synthetic_dataset(0, 2, 48), tmp_path)
    (tmp_path / "building_2.csv").unlink()
    with pytest.raises(DatasetError, match="building"):
        load_dataset(tmp_path)


def test_flag_column_must_be_binary():
    with pytest.raises(DatasetError):
        TimeSeriesColumn("power_outage", "flag", np.array([0.0, 0.5]))


def test_unit_must_match_name():
    with pytest.raises(DatasetError):
        TimeSeriesColumn("non_shiftable_load", "kW", np.zeros(3))


def test_synthetic_determinism():
    a = generate_synthetic_dataset(7, 2, 168)
    b = generate_synthetic_dataset(7, 2, 168)
    assert bundles_equal(a, b)
    assert a.fingerprint() == b.fingerprint()


def test_synthetic_seed_sensitivity():
    assert not bundles_equal(generate_synthetic_dataset(7, 2, 168), generate_synthetic_dataset(8, 2, 168))


def test_synthetic_requires_two_days():
    with pytest.raises(ValueError):
        generate_synthetic_dataset(0, 1, 47)
    with pytest.raises(ValueError):
        generate_synthetic_dataset(0, 0, 48)


def test_synthetic_has_outage_window_per_building():
    b = generate_synthetic_dataset(4, 5, 168)
    for bld in b.buildings:
        assert bld["power_outage"].sum() >= 1


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 3), days=st.integers(2, 10))
def test_synthetic_invariants(seed, n, days):
    b = generate_synthetic_dataset(seed, n, 24 * days)
    direct = b.weather["direct_solar_irradiance"]
    for bld in b.buildings:
        assert np.all(bld["solar_generation"][direct == 0] == 0)
        for name in BUILDING_COLUMNS:
            assert len(bld[name]) == b.T
            if name != "indoor_dry_bulb_temperature_set_point":
                assert np.all(bld[name] >= 0)
    # forecast columns are shifted base columns
    for table, bases in ((b.weather, WEATHER_BASE), (b.pricing, (PRICE,))):
        for base in bases:
            f = table[base]
            for h in FORECAST_LEADS:
                fh = table[forecast_name(base, h)]
                idx = np.minimum(np.arange(b.T) + h, b.T - 1)
                assert np.array_equal(fh, f[idx])


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.integers(0, 60))
def test_shift_forecast_property(values, lead):
    f = np.array(values)
    out = shift_forecast(f, lead)
    for t in range(len(f)):
        assert out[t] == f[min(t + lead, len(f) - 1)]


def test_bundle_arrays_are_read_only():
    b = generate_synthetic_dataset(0, 1, 48)
    with pytest.raises(ValueError):
        b.carbon_intensity[0] = 1.0


def test_inconsistent_forecast_rejected(tmp_path):
    write_dataset(generate_synthetic_dataset(0, 1, 48), tmp_path)
    _rewrite_column(tmp_path / "weather.csv", forecast_name(TEMPERATURE, 6), lambda i, v: repr(float(v) + 1.0))
    with pytest.raises(DatasetError, match="forecast"):
        load_dataset(tmp_path)


def test_mask_all_leads_drops_six():
    full = ObservationSchema()
    masked = mask_forecast_features(None, {6, 12, 24})
    assert len(full) - len(masked) == 6
    dropped = set(full.features) - set(masked.features)
    assert dropped == {forecast_name(b, h) for b in (TEMPERATURE, PRICE) for h in (6, 12, 24)}
    assert TEMPERATURE in masked.features and PRICE in masked.features


def test_mask_empty_is_identity():
    assert mask_forecast_features(None, set()) == ObservationSchema()


def test_mask_single_lead_drops_two():
    assert len(ObservationSchema()) - len(mask_forecast_features(None, {12})) == 2


def test_mask_rejects_unknown_lead():
    with pytest.raises(ValueError):
        mask_forecast_features(None, {3})


def test_mask_accepts_bundle(district2):
    assert len(mask_forecast_features(district2, {6})) == len(ObservationSchema()) - 2


def test_schema_digest_changes_with_mask():
    assert ObservationSchema().digest() != mask_forecast_features(None, {6}).digest()
