"""Reference curves: validation, lookup, calibration, persistence."""

from __future__ import annotations

import json
import math

import pytest

from ddakit.errors import ConfigError, DomainError, ValidationError
from ddakit.reference import (
    CurveSource,
    ReferenceCurve,
    ReferenceSet,
    calibrate,
    load_reference,
    lookup,
    save_reference,
)
from ddakit.rng import derive_seed
from ddakit.sim.arena import run_episode
from ddakit.sim.config import BOTS, arena


def make_curve(points=((0, 0.0), (100, 50.0), (200, 80.0)), z=40.0, **kw):
    kw.setdefault("var_id", "dmg")
    kw.setdefault("dispersion", tuple(0.0 for _ in points))
    kw.setdefault("source", CurveSource(kind="manual"))
    return ReferenceCurve(points=tuple(points), z_per_window=z, **kw)


# -- curve shape ----------------------------------------------------------


def test_curve_validation():
    with pytest.raises(ValidationError, match="at least 2 points"):
        make_curve(points=((0, 0.0),))
    with pytest.raises(ValidationError, match="tick 0"):
        make_curve(points=((10, 0.0), (20, 1.0)))
    with pytest.raises(ValidationError, match="strictly increase"):
        make_curve(points=((0, 0.0), (100, 1.0), (100, 2.0)))
    with pytest.raises(ValidationError, match="dispersion length"):
        make_curve(dispersion=(0.0,))
    with pytest.raises(ValidationError, match="n_runs"):
        make_curve(source=CurveSource(kind="bot_calibration"))


def test_lookup_interpolates_and_clamps():
    c = make_curve()
    assert lookup(c, 0) == 0.0
    assert lookup(c, 50) == pytest.approx(25.0)
    assert lookup(c, 100) == 50.0
    assert lookup(c, 150) == pytest.approx(65.0)
    # Beyond the knots the curve holds its edge values.
    assert lookup(c, 10_000) == 80.0
    with pytest.raises(DomainError):
        lookup(c, -1)


def test_reference_set_access():
    rs = ReferenceSet(window_len=100, curves={"dmg": make_curve()})
    assert "dmg" in rs
    assert "other" not in rs
    assert rs.get("dmg").var_id == "dmg"
    assert rs.get("other") is None
    assert list(rs) == ["dmg"]


# -- persistence ------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    rs = ReferenceSet(
        window_len=100,
        curves={
            "dmg": make_curve(),
            "deaths": make_curve(
                var_id="deaths",
                points=((0, 0.0), (100, 2.0)),
                dispersion=(0.0, 0.5),
                z=2.0,
                source=CurveSource("bot_calibration", "medium", 10, 7),
            ),
        },
    )
    path = tmp_path / "ref.json"
    save_reference(rs, path)
    loaded = load_reference(path)
    assert loaded.window_len == 100
    assert loaded.curves == rs.curves


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_reference(tmp_path / "missing.json")

    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_reference(bad)

    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"schema": "something-else", "window_len": 1, "curves": []}))
    with pytest.raises(ConfigError, match="expected schema"):
        load_reference(wrong)

    broken = tmp_path / "broken.json"
    broken.write_text(
        json.dumps(
            {
                "schema": "ddakit-reference@1",
                "window_len": 100,
                "curves": [{"var_id": "dmg", "points": [[0, 0.0]], "dispersion": [0.0], "z_per_window": 1.0}],
            }
        )
    )
    with pytest.raises(ConfigError, match="curve 'dmg'"):
        load_reference(broken)


# -- calibration -------------------------------------------------------------


def _small_config():
    return arena().replacing(waves=2, wave_interval=60, window_len=120, max_ticks=20_000)


def test_calibrate_matches_manual_averaging():
    """Re-derive the curve from raw episode traces with independent math."""
    config = _small_config()
    bot = BOTS["medium"]
    refs = calibrate(config, bot, n_runs=3, seed=5)

    per_run: dict[str, list[list[float]]] = {v.var_id: [] for v in config.variables}
    per_n: dict[str, list[float]] = {v.var_id: [] for v in config.variables}
    for i in range(3):
        trace = run_episode(config, bot, seed=derive_seed(5, f"calibration/{i}"), window_len=120)
        series = {v.var_id: [] for v in config.variables}
        for rec in trace.records_of_type("window"):
            for var_id, cell in rec["vars"].items():
                series[var_id].append(cell["cum"])
                per_n[var_id].append(cell["n"])
        for var_id, cums in series.items():
            per_run[var_id].append(cums)

    for var in config.variables:
        curve = refs.curves[var.var_id]
        runs = per_run[var.var_id]
        assert curve.points[0] == (0, 0.0)
        for idx, (tick, value) in enumerate(curve.points[1:]):
            assert tick == (idx + 1) * 120
            col = [r[idx] for r in runs if len(r) > idx]
            assert value == pytest.approx(sum(col) / len(col))
            if len(col) > 1:
                mean = sum(col) / len(col)
                std = math.sqrt(sum((x - mean) ** 2 for x in col) / (len(col) - 1))
                assert curve.dispersion[idx + 1] == pytest.approx(std)
        ns = per_n[var.var_id]
        assert curve.z_per_window == pytest.approx(sum(ns) / len(ns))
        assert curve.source.kind == "bot_calibration"
        assert curve.source.profile == "medium"
        assert curve.source.n_runs == 3


def test_calibrate_is_deterministic():
    config = _small_config()
    a = calibrate(config, BOTS["novice"], n_runs=2, seed=9)
    b = calibrate(config, BOTS["novice"], n_runs=2, seed=9)
    assert a.curves == b.curves
    c = calibrate(config, BOTS["novice"], n_runs=2, seed=10)
    assert a.curves != c.curves


def test_calibrate_argument_domains():
    config = _small_config()
    with pytest.raises(DomainError):
        calibrate(config, BOTS["medium"], n_runs=0)
    with pytest.raises(DomainError):
        calibrate(config, BOTS["medium"], n_runs=1, window_len=0)


def test_calibrate_rejects_episodes_shorter_than_a_window():
    config = _small_config().replacing(window_len=50_000)
    with pytest.raises(ValidationError, match="no closed windows"):
        calibrate(config, BOTS["medium"], n_runs=1)
