import matplotlib.image as mpimg
import numpy as np
import pytest

from paramrc.experiment import SweepGrid
from paramrc.regimes import Regime, RegimeLabel
from paramrc.render import FAILED_COLOR, render_heatmap

MAGENTA = np.array([1.0, 0.0, 1.0])


def _grid(nmse, failures=None, label=RegimeLabel.PARAMETRIC_RESONANCE):
    n1, n2 = nmse.shape
    failures = failures or [[None] * n2 for _ in range(n1)]
    regime = [[Regime(label)] * n2 for _ in range(n1)]
    return SweepGrid(("f_avg", "delta1"), (np.linspace(0, 50, n1), np.linspace(-10, 10, n2)),
                     nmse, regime, failures)


def _has_color(path, rgb, tol=0.02):
    img = mpimg.imread(path)[..., :3]
    return bool(np.any(np.all(np.abs(img - rgb) < tol, axis=-1)))


def test_failed_cell_is_distinct(tmp_path):
    assert FAILED_COLOR == "#ff00ff"
    clean = _grid(np.full((4, 5), 0.01))
    p0 = render_heatmap(clean, tmp_path / "clean.png", with_regimes=False)
    assert not _has_color(p0, MAGENTA)
    fails = [[None] * 5 for _ in range(4)]
    fails[2][3] = "divergence"
    nmse = np.full((4, 5), 0.01)
    nmse[2, 3] = np.nan
    p1 = render_heatmap(_grid(nmse, fails), tmp_path / "fail.png", with_regimes=False)
    assert _has_color(p1, MAGENTA)


def test_uniform_grid_renders(tmp_path):
    p = render_heatmap(_grid(np.full((3, 3), 0.5)), tmp_path / "u.png", scale="linear")
    assert p.exists() and p.stat().st_size > 0


def test_log_scale_spans_decades(tmp_path):
    nmse = np.array([[1e-3, 1e-1], [1e-3, 1e-1]])
    g = _grid(nmse)
    np.testing.assert_allclose(g.log10_nmse, [[-3, -1], [-3, -1]])
    render_heatmap(g, tmp_path / "d.svg", title="decades")
    assert (tmp_path / "d.svg").read_text().count("<svg") == 1


def test_regime_boundaries_drawn(tmp_path):
    g = _grid(np.full((4, 4), 0.1))
    for i in range(2):
        g.regime[i] = [Regime(RegimeLabel.SUB_THRESHOLD)] * 4
    render_heatmap(g, tmp_path / "r.png")
    assert _has_color(tmp_path / "r.png", np.array([1.0, 1.0, 1.0]))


def test_bad_inputs(tmp_path):
    empty = SweepGrid(("f_avg", "delta1"), (np.array([]), np.array([1.0])),
                      np.zeros((0, 1)), [], [])
    with pytest.raises(ValueError):
        render_heatmap(empty, tmp_path / "e.png")
    with pytest.raises(ValueError):
        render_heatmap(_grid(np.ones((2, 2))), tmp_path / "x.png", scale="cubic")
