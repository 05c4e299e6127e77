import json
import math

import pytest

import cavlab


def small_config():
    c = cavlab.ExperimentConfig.defaults()
    c.h = 1.0 / 12
    c.positions = [(0.5, 0.25), (0.25, 0.5)]
    c.fractions = [0.031]
    c.d0_values = [3.0, 1.0]
    return c


def test_measure_disk_energy_increases_and_duality_holds():
    m = cavlab.measure_disk((0.5, 0.5), 0.1, h=1.0 / 16)
    assert m.W > m.W0 > 0
    assert m.area == pytest.approx(math.pi * 0.01, rel=1e-15)
    assert abs(m.boundary_W - m.W) <= 1e-10 * (1 + m.W)
    assert m.ratio == pytest.approx((m.W - m.W0) / m.W0, rel=1e-12)


def test_balanced_measurement_has_no_net_force():
    m = cavlab.measure_disk((0.4, 0.6), 0.1, h=1.0 / 16, balance=True)
    assert m.balanced
    assert math.hypot(*m.net_force_outer) <= 1e-8


def test_errors_map_to_python_exceptions():
    with pytest.raises(cavlab.GeometryError):
        cavlab.measure_disk((0.5, 0.5), 0.6, h=0.25)
    with pytest.raises(cavlab.DatumError):
        cavlab.measure_disk((0.5, 0.5), 0.1, preset="vortex", h=0.25)
    with pytest.raises(cavlab.ConfigError):
        cavlab.ExperimentConfig.parse('{"fem": {"solver": "cg"}}')
    assert issubclass(cavlab.ConfigError, ValueError)


def test_grid_calibration_and_csv_round_trip():
    records, skipped = cavlab.run_grid(small_config(), threads=1)
    assert [r.run_id for r in records] == sorted(r.run_id for r in records)
    assert len(records) + len(skipped) == 4
    cal = cavlab.calibrate(records)
    assert cal.used == len(records)
    assert 0 < cal.K_low <= cal.K_hat
    filled = cavlab.apply_calibration(records, cal)
    for r in filled:
        assert r.lower <= r.area_frac <= r.upper
    back = cavlab.parse_csv(cavlab.csv_text(filled))
    assert [r.W for r in back] == [r.W for r in filled]
    by = cavlab.calibrate_by_d0(records, small_config().d0_distances())
    doc = json.loads(cavlab.calibration_json(cal, by))
    assert "by_d0" in doc


def test_sweep_is_increasing():
    c = small_config()
    c.sweep = (0.05, 0.25, 3)
    rows = cavlab.run_sweep(c, threads=1)
    assert len(rows) == 3
    assert rows[0].ratio < rows[1].ratio < rows[2].ratio
