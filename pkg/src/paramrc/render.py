"""Heatmaps of sweep grids with regime boundaries overlaid."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from .experiment import SweepGrid  # noqa: E402

REGIME_ORDER = ["ST", "BS", "PR", "FC", "FC-coherent", "FC-chaotic"]
REGIME_COLORS = ["#d9d9d9", "#9ecae1", "#31a354", "#fdae6b", "#fd8d3c", "#a50f15"]
FAILED_COLOR = "#ff00ff"

AXIS_LABELS = {
    "f_avg": r"$F_{avg}$",
    "delta1": r"$\Delta_1$",
    "delta_f": r"$\Delta F$",
    "kappa": r"$\kappa$",
    "gamma21": r"$\gamma_{21}$",
    "data_rate": "data rate (samples/s)",
}


def regime_codes(grid: SweepGrid) -> np.ndarray:
    labels = grid.regime_strings()
    return np.vectorize(REGIME_ORDER.index)(labels).astype(float)


def _edges(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if len(values) == 1:
        return np.array([values[0] - 0.5, values[0] + 0.5])
    mid = 0.5 * (values[1:] + values[:-1])
    return np.concatenate([[2 * values[0] - mid[0]], mid, [2 * values[-1] - mid[-1]]])


def render_heatmap(grid: SweepGrid, path: str | Path, scale: str = "log10",
                   title: str | None = None, with_regimes: bool = True) -> Path:
    """NMSE map (axis 2 horizontal, axis 1 vertical) and, optionally, the regime map.

    Failed cells are painted magenta; regime boundaries are drawn as contours
    on the NMSE panel.
    """
    if grid.shape[0] == 0 or grid.shape[1] == 0:
        raise ValueError("empty grid")
    if scale not in ("log10", "linear"):
        raise ValueError("scale must be 'log10' or 'linear'")
    path = Path(path)
    v1, v2 = grid.axis_values
    data = grid.log10_nmse if scale == "log10" else grid.nmse.copy()
    failed = np.array([[bool(f) for f in row] for row in grid.failures])
    data = np.ma.masked_where(failed | ~np.isfinite(data), data)
    codes = regime_codes(grid)

    n_panels = 2 if with_regimes else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(5.5 * n_panels, 4.5), squeeze=False)
    ax = axes[0, 0]
    x_e, y_e = _edges(v2), _edges(v1)
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad(FAILED_COLOR)
    finite = data.compressed()
    vmin, vmax = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    if vmin == vmax:
        vmin, vmax = vmin - 0.5, vmax + 0.5
    mesh = ax.pcolormesh(x_e, y_e, data, cmap=cmap, vmin=vmin, vmax=vmax, shading="flat")
    fig.colorbar(mesh, ax=ax, label="log10(NMSE)" if scale == "log10" else "NMSE")

    handles = []
    if len(np.unique(codes)) > 1 and min(grid.shape) > 1:
        ax.contour(v2, v1, codes, levels=np.arange(len(REGIME_ORDER)) + 0.5,
                   colors="white", linewidths=1.0)
        handles.append(Patch(edgecolor="white", facecolor="none", label="regime boundary"))
    if failed.any():
        handles.append(Patch(color=FAILED_COLOR, label="failed cell"))
    if handles:
        ax.legend(handles=handles, loc="upper right", fontsize=7, facecolor="0.3",
                  labelcolor="white")
    ax.set_xlabel(AXIS_LABELS.get(grid.axis_names[1], grid.axis_names[1]))
    ax.set_ylabel(AXIS_LABELS.get(grid.axis_names[0], grid.axis_names[0]))
    ax.set_title(title or "NMSE")

    if with_regimes:
        ax2 = axes[0, 1]
        rmap = ListedColormap(REGIME_COLORS)
        ax2.pcolormesh(x_e, y_e, codes, cmap=rmap, vmin=-0.5, vmax=len(REGIME_ORDER) - 0.5,
                       shading="flat")
        present = sorted(set(codes.ravel().astype(int)))
        ax2.legend(handles=[Patch(color=REGIME_COLORS[k], label=REGIME_ORDER[k]) for k in present],
                   loc="upper right", fontsize=7)
        ax2.set_xlabel(ax.get_xlabel())
        ax2.set_ylabel(ax.get_ylabel())
        ax2.set_title("regime")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
