import math

import numpy as np
import pytest

from paramrc.benchmarks import System, benchmark_series
from paramrc.errors import ConfigError
from paramrc.experiment import (Axis, BenchmarkConfig, ExperimentConfig, evaluate_series,
                                regime_only_grid, required_length, run_point, run_sweep)
from paramrc.readout import SplitSpec
from paramrc.regimes import CombProbe, RegimeLabel
from paramrc.reservoir import FeatureConfig

SMALL = ExperimentConfig(
    series=BenchmarkConfig(n_points=300, test_window=0, transient_discard=200),
    features=FeatureConfig(n_virtual_nodes=32, n_fft=16),
    split=SplitSpec(washout=50),
    comb_probe=None,
    benchmarks=(System.MACKEY_GLASS,),
)


@pytest.fixture(scope="module")
def mg_series():
    return benchmark_series(SMALL.series_spec(System.MACKEY_GLASS))


def test_axis_values_and_parse():
    a = Axis.parse("f_avg:0:50:21")
    assert a.name == "f_avg" and len(a.values) == 21 and a.values[-1] == 50
    assert Axis.parse(str(a)) == a
    lg = Axis.parse("data_rate:242.4:24240:3:log")
    np.testing.assert_allclose(lg.values, [242.4, 2424, 24240])
    assert Axis("kappa", 2, 2, 1).values.tolist() == [2.0]


@pytest.mark.parametrize("bad", ["f_avg:0:50", "nope:0:1:3", "f_avg:5:1:3", "f_avg:0:1:0",
                                 "f_avg:a:1:3", "data_rate:0:10:3:log", "f_avg:1:1:3"])
def test_axis_rejects(bad):
    with pytest.raises(ConfigError):
        Axis.parse(bad)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(axes=(Axis.parse("f_avg:0:1:2"),) * 2)
    with pytest.raises(ConfigError):
        ExperimentConfig(lam=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(gamma21=0.0)
    assert ExperimentConfig(benchmarks=("lorenz",)).benchmarks == (System.LORENZ,)


def test_required_length_covers_test_window():
    split = SplitSpec()
    n = required_length(1000, split)
    usable = n - 1 - split.washout
    assert usable - math.floor(0.8 * usable) >= 1000
    usable -= 1
    assert usable - math.floor(0.8 * usable) < 1000
    assert ExperimentConfig().series_spec(System.LORENZ).n_points == n
    assert required_length(0, split) == 0


def test_encoding_follows_rate():
    cfg = ExperimentConfig(data_rate=242.4, gamma1_scale=2424.0)
    assert cfg.encoding.symbol_duration == pytest.approx(10.0)


def test_evaluate_series_pr_beats_mean(mg_series):
    res = evaluate_series(mg_series, SMALL, System.MACKEY_GLASS, keep=True)
    assert res.failure is None and res.nmse < 0.1
    assert res.n_features > 1 and not res.degenerate_features
    assert len(res.truth) == len(res.prediction)


def test_subthreshold_without_modulation_is_mean_predictor(mg_series):
    cfg = SMALL.at(f_avg=5.0, delta_f=0.0)
    res = evaluate_series(mg_series, cfg, System.MACKEY_GLASS)
    assert res.failure is None
    assert res.nmse == pytest.approx(1.0, abs=0.1)


def test_invalid_encoding_recorded(mg_series):
    res = evaluate_series(mg_series, SMALL.at(f_avg=2.0, delta_f=10.0), System.MACKEY_GLASS)
    assert res.failure == "invalid-config" and res.nmse is None


def test_end_to_end_determinism(mg_series):
    a = evaluate_series(mg_series, SMALL, System.MACKEY_GLASS).nmse
    b = evaluate_series(mg_series, SMALL, System.MACKEY_GLASS).nmse
    assert a == b


def test_run_point_reports_traces():
    cfg = SMALL.at(comb_probe=CombProbe(transient=20.0, window=40.96, n_samples=4096))
    r = run_point(cfg)
    assert r.regime.label == RegimeLabel.PARAMETRIC_RESONANCE
    assert set(r.benchmarks) == {System.MACKEY_GLASS}
    assert len(r.trace_power) == 4096 and len(r.spectrum) == 2049
    assert not r.failed


def test_single_cell_sweep_matches_run_point(mg_series):
    cfg = SMALL.at(axes=(Axis("f_avg", 40, 40, 1), Axis("delta1", -4.5, -4.5, 1)))
    grid = run_sweep(cfg)
    point = run_point(SMALL, traces=False)
    assert grid.shape == (1, 1)
    assert grid.nmse[0, 0] == point.benchmarks[System.MACKEY_GLASS].nmse
    assert str(grid.regime[0][0]) == "PR"


def test_sweep_shape_failures_and_sharing(mg_series):
    cfg = SMALL.at(axes=(Axis.parse("f_avg:0:40:3"), Axis.parse("delta1:-4.5:4.5:2")))
    grid = run_sweep(cfg, series=mg_series)
    assert grid.shape == (3, 2) and grid.axis_names == ("f_avg", "delta1")
    # F_avg = 0 with delta_f = 10 would drive negative
    assert grid.failures[0] == ["invalid-config", "invalid-config"]
    assert np.isnan(grid.nmse[0]).all() and np.isfinite(grid.nmse[1:]).all()
    for i, j in grid.cells():
        assert (grid.failures[i][j] is None) != np.isnan(grid.nmse[i, j])
    assert grid.any_failure
    assert grid.metadata["series_sha256"] == mg_series.digest()
    assert grid.regime_strings()[2, 0] == "PR"


def test_single_axis_sweep_gets_singleton_partner():
    grid = regime_only_grid(SMALL.at(axes=(Axis.parse("kappa:-9:-5:3"),)))
    assert grid.axis_names == ("kappa", "delta1") and grid.shape == (3, 1)


@pytest.mark.slow
def test_parallel_equals_serial(mg_series):
    cfg = SMALL.at(axes=(Axis.parse("f_avg:20:40:2"), Axis.parse("delta1:-4.5:2:2")))
    a = run_sweep(cfg, series=mg_series, workers=1)
    b = run_sweep(cfg, series=mg_series, workers=2)
    assert a.nmse.tobytes() == b.nmse.tobytes()
    assert a.regime == b.regime and a.failures == b.failures


def test_regime_only_grid_matches_classifier():
    cfg = SMALL.at(axes=(Axis.parse("f_avg:0:50:6"), Axis.parse("delta1:-10:10:5")))
    grid = regime_only_grid(cfg)
    assert grid.shape == (6, 5) and grid.metadata["kind"] == "regime"
    assert str(grid.regime[0][0]) == "ST"
