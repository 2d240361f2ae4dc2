import numpy as np
import pytest

from paramrc.benchmarks import SeriesSpec, System, benchmark_series
from paramrc.errors import ConfigError
from paramrc.experiment import Axis, BenchmarkConfig, ExperimentConfig, SweepGrid, run_sweep
from paramrc.io import (apply_settings, config_to_ini, load_config, load_model, read_features,
                        read_grid, read_series, save_model, series_header, sidecar_path,
                        write_features, write_grid, write_series)
from paramrc.readout import RidgeModel, SplitSpec
from paramrc.regimes import CombCharacter, Regime, RegimeLabel
from paramrc.reservoir import FeatureConfig, fit_preprocess


def test_load_config_file_and_overrides(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text("[point]\nf_avg = 20\ndelta1 = 2.0\n[benchmark]\nsystems = lorenz, rossler\n"
                 "interval.lorenz = 0.05\n[comb]\nenabled = false\n"
                 "[sweep]\naxis1 = kappa:-9:-5:3\n")
    cfg = load_config(p, {"point.f_avg": "30", "readout.washout": "100"})
    assert cfg.f_avg == 30.0 and cfg.delta1 == 2.0
    assert cfg.benchmarks == (System.LORENZ, System.ROSSLER)
    assert cfg.series.intervals == {"lorenz": 0.05}
    assert cfg.series_spec(System.LORENZ).interval == 0.05
    assert cfg.comb_probe is None and cfg.split.washout == 100
    assert cfg.axes == (Axis("kappa", -9, -5, 3),)


@pytest.mark.parametrize("settings", [{"point.nope": "1"}, {"point.f_avg": "abc"},
                                      {"sweep.axis1": "f_avg:1:0:3"}, {"readout.lambda": "0"},
                                      {"benchmark.map": "henon"}, {"comb.enabled": "maybe"}])
def test_bad_settings_raise_config_error(settings):
    with pytest.raises(ConfigError):
        apply_settings(ExperimentConfig(), settings)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_config_ini_roundtrip(tmp_path):
    cfg = ExperimentConfig(f_avg=12.5, delta_f=3.0, benchmarks=(System.ROSSLER,),
                           series=BenchmarkConfig(n_points=500, intervals={"rossler": 0.5}),
                           axes=(Axis.parse("f_avg:0:50:21"), Axis.parse("data_rate:242.4:24240:3:log")))
    p = tmp_path / "c.ini"
    p.write_text(config_to_ini(cfg))
    assert load_config(p) == cfg
    off = cfg.at(comb_probe=None)
    p.write_text(config_to_ini(off))
    assert load_config(p) == off


def _grid():
    regs = [[Regime(RegimeLabel.PARAMETRIC_RESONANCE), Regime(RegimeLabel.FREQUENCY_COMB, CombCharacter.CHAOTIC)],
            [Regime(RegimeLabel.SUB_THRESHOLD), Regime(RegimeLabel.BISTABLE)]]
    nmse = np.array([[1e-3, np.nan], [0.9, 0.1 + 1e-17]])
    fails = [[None, "divergence"], [None, None]]
    return SweepGrid(("f_avg", "delta1"), (np.array([10.0, 20.0]), np.array([-1.0, 1.0 / 3])),
                     nmse, regs, fails, {"series_sha256": "abc"})


def test_grid_roundtrip(tmp_path):
    g = _grid()
    path = write_grid(g, tmp_path / "g.csv")
    assert sidecar_path(path).exists()
    back = read_grid(path)
    assert back.axis_names == g.axis_names
    for k in range(2):
        np.testing.assert_array_equal(back.axis_values[k], g.axis_values[k])
    np.testing.assert_array_equal(back.nmse, g.nmse)
    assert back.regime == g.regime and back.failures == g.failures
    assert back.metadata == g.metadata
    lines = path.read_text().splitlines()
    assert lines[0].startswith("axis1,f_avg,") and lines[1].startswith("axis2,delta1,")
    assert lines[2] == "i,j,f_avg,delta1,nmse,log10_nmse,regime,failure"
    assert lines[4].endswith(",,FC-chaotic,divergence")
    assert float(lines[3].split(",")[5]) == pytest.approx(-3.0)


def test_read_grid_rejects_other_files(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_grid(p)


def test_identical_config_gives_identical_grid_bytes(tmp_path):
    cfg = ExperimentConfig(
        series=BenchmarkConfig(n_points=200, test_window=0, transient_discard=100),
        features=FeatureConfig(n_virtual_nodes=16, n_fft=8), split=SplitSpec(washout=20),
        comb_probe=None, axes=(Axis.parse("f_avg:20:40:2"), Axis.parse("delta1:-4.5:4.5:2")))
    a = write_grid(run_sweep(cfg), tmp_path / "a.csv")
    b = write_grid(run_sweep(cfg), tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert sidecar_path(a).read_bytes() == sidecar_path(b).read_bytes()


@pytest.mark.parametrize("binary", [False, True])
def test_series_roundtrip(tmp_path, binary):
    spec = SeriesSpec(System.MACKEY_GLASS, n_points=50)
    s = benchmark_series(spec)
    p = write_series(s.values, tmp_path / "s.dat", series_header(spec, s, len(s)), binary)
    values, head = read_series(p)
    np.testing.assert_array_equal(values, s.values)
    assert head["system"] == "mackey_glass" and head["length"] == 50
    assert head["raw_min"] == s.raw_min


def test_features_roundtrip(tmp_path):
    m = np.random.default_rng(0).standard_normal((7, 5))
    mask = np.array([True, False, True, True, False])
    p = write_features(m, tmp_path / "f.bin", mask)
    back, mask_back = read_features(p)
    np.testing.assert_array_equal(back, m)
    np.testing.assert_array_equal(mask_back, mask)
    with pytest.raises(ValueError):
        write_features(m, tmp_path / "g.bin", mask[:3])
    (tmp_path / "bad.bin").write_bytes(b"nonsense")
    with pytest.raises(ValueError):
        read_features(tmp_path / "bad.bin")


def test_model_roundtrip(tmp_path):
    raw = np.abs(np.random.default_rng(1).standard_normal((10, 4))) + 0.1
    state = fit_preprocess(raw, FeatureConfig(n_virtual_nodes=2, n_fft=0))
    m = RidgeModel(np.arange(5.0), 1e-3, state, intercept_column=True)
    back = load_model(save_model(m, tmp_path / "m.npz"))
    np.testing.assert_array_equal(back.predict_raw(raw), m.predict_raw(raw))
    bare = load_model(save_model(RidgeModel(np.ones(3), 0.5), tmp_path / "b.npz"))
    assert bare.preprocess_state is None and bare.lam == 0.5
