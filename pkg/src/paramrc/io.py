"""File formats: experiment config (INI), grids (CSV + JSON sidecar),
series, feature matrices and trained readouts."""

from __future__ import annotations

import configparser
import csv
import io as _io
import json
import math
import platform
import struct
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import NormalizedSeries, SeriesSpec, System
from .errors import ConfigError
from .experiment import Axis, ExperimentConfig, SweepGrid
from .readout import RidgeModel
from .regimes import CombProbe, Regime
from .reservoir import PreprocessState

# --------------------------------------------------------------------------
# experiment config

# (section, key) -> (attribute path, parser)
_FIELDS = {
    ("point", "f_avg"): ("f_avg", float),
    ("point", "delta1"): ("delta1", float),
    ("point", "kappa"): ("kappa", float),
    ("point", "gamma21"): ("gamma21", float),
    ("point", "delta_f"): ("delta_f", float),
    ("point", "data_rate"): ("data_rate", float),
    ("point", "gamma1_scale"): ("gamma1_scale", float),
    ("point", "warmup_symbols"): ("warmup_symbols", int),
    ("benchmark", "systems"): ("benchmarks", lambda s: tuple(System(x.strip()) for x in s.split(",") if x.strip())),
    ("benchmark", "map"): ("map_benchmark", System),
    ("benchmark", "n_points"): ("series.n_points", int),
    ("benchmark", "test_window"): ("series.test_window", int),
    ("benchmark", "transient_discard"): ("series.transient_discard", int),
    ("features", "n_virtual_nodes"): ("features.n_virtual_nodes", int),
    ("features", "n_fft"): ("features.n_fft", int),
    ("features", "epsilon"): ("features.epsilon", float),
    ("features", "zero_var_tol"): ("features.zero_var_tol", float),
    ("integrator", "rel_tol"): ("integrator.rel_tol", float),
    ("integrator", "abs_tol"): ("integrator.abs_tol", float),
    ("integrator", "initial_step"): ("integrator.initial_step", float),
    ("integrator", "max_step"): ("integrator.max_step", float),
    ("integrator", "blow_up_bound"): ("integrator.blow_up_bound", float),
    ("readout", "lambda"): ("lam", float),
    ("readout", "washout"): ("split.washout", int),
    ("readout", "train_fraction"): ("split.train_fraction", float),
    ("comb", "transient"): ("comb_probe.transient", float),
    ("comb", "window"): ("comb_probe.window", float),
    ("comb", "n_samples"): ("comb_probe.n_samples", int),
    ("comb", "k"): ("comb_probe.k", int),
    ("comb", "threshold"): ("comb_probe.threshold", float),
    ("sweep", "workers"): ("workers", int),
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _set_path(values: dict, path: str, value):
    head, _, rest = path.partition(".")
    if rest:
        values.setdefault(head, {})[rest] = value
    else:
        values[head] = value


def apply_settings(cfg: ExperimentConfig, settings: dict[str, str]) -> ExperimentConfig:
    """Apply ``{"section.key": "text"}`` settings on top of ``cfg``."""
    top: dict = {}
    axes = {}
    comb_enabled = cfg.comb_probe is not None
    intervals = dict(cfg.series.intervals)
    for dotted, text in settings.items():
        section, _, key = dotted.partition(".")
        try:
            if section == "sweep" and key in ("axis1", "axis2"):
                axes[key] = None if not text.strip() else Axis.parse(text.strip())
            elif section == "comb" and key == "enabled":
                comb_enabled = _parse_bool(text)
            elif section == "benchmark" and key.startswith("interval."):
                intervals[System(key.split(".", 1)[1]).value] = float(text)
            elif (section, key) in _FIELDS:
                path, parser = _FIELDS[(section, key)]
                _set_path(top, path, parser(text))
            else:
                raise ConfigError(f"unknown setting {dotted!r}")
        except ConfigError:
            raise
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad value for {dotted}: {text!r} ({exc})") from None

    try:
        nested = {}
        for name, sub in (("series", cfg.series), ("features", cfg.features),
                          ("integrator", cfg.integrator), ("split", cfg.split)):
            changes = top.pop(name, {})
            if name == "series":
                changes["intervals"] = intervals
            nested[name] = replace(sub, **changes)
        probe_changes = top.pop("comb_probe", {})
        probe = None
        if comb_enabled:
            probe = replace(cfg.comb_probe or CombProbe(), **probe_changes)
        if axes:
            current = {"axis1": cfg.axes[0] if len(cfg.axes) > 0 else None,
                       "axis2": cfg.axes[1] if len(cfg.axes) > 1 else None}
            current.update(axes)
            top["axes"] = tuple(a for a in (current["axis1"], current["axis2"]) if a)
        return replace(cfg, comb_probe=probe, **nested, **top)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None = None,
                overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read an INI experiment file (optional) and apply ``overrides`` last."""
    settings: dict[str, str] = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for section in parser.sections():
            for key, value in parser.items(section):
                settings[f"{section}.{key}"] = value
    settings.update(overrides or {})
    return apply_settings(ExperimentConfig(), settings)


def config_to_ini(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    sections: dict[str, dict[str, str]] = {}
    for (section, key), (path, _) in _FIELDS.items():
        obj = cfg
        parts = path.split(".")
        if parts[0] == "comb_probe" and cfg.comb_probe is None:
            continue
        for p in parts:
            obj = getattr(obj, p)
        if isinstance(obj, tuple):
            text = ", ".join(System(x).value for x in obj)
        elif isinstance(obj, System):
            text = obj.value
        else:
            text = repr(obj)
        sections.setdefault(section, {})[key] = text
    for name, value in sorted(cfg.series.intervals.items()):
        sections["benchmark"][f"interval.{name}"] = repr(value)
    sections.setdefault("comb", {})["enabled"] = str(cfg.comb_probe is not None).lower()
    for i, axis in enumerate(cfg.axes, 1):
        sections.setdefault("sweep", {})[f"axis{i}"] = str(axis)
    for section, values in sections.items():
        parser[section] = values
    buf = _io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_snapshot(cfg: ExperimentConfig) -> dict:
    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, System):
            return obj.value
        if isinstance(obj, float) and not math.isfinite(obj):
            return repr(obj)
        return obj

    snap = clean(asdict(cfg))
    snap["axes"] = [str(a) for a in cfg.axes]
    snap["series_specs"] = {s.value: cfg.series_spec(s).to_dict() for s in System}
    return snap


def environment_versions() -> dict:
    import numba
    import scipy

    return {
        "paramrc": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


# --------------------------------------------------------------------------
# grids

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def write_grid(grid: SweepGrid, path: str | Path, metadata: bool = True) -> Path:
    """CSV grid plus ``<path>.json`` sidecar holding the metadata."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for k in range(2):
            w.writerow([f"axis{k + 1}", grid.axis_names[k]] + [repr(float(v)) for v in grid.axis_values[k]])
        n1, n2 = grid.axis_names
        w.writerow(["i", "j", n1, n2, "nmse", "log10_nmse", "regime", "failure"])
        logs = grid.log10_nmse
        for i, j in grid.cells():
            w.writerow([i, j, repr(float(grid.axis_values[0][i])), repr(float(grid.axis_values[1][j])),
                        _fmt(grid.nmse[i, j]), _fmt(logs[i, j]), str(grid.regime[i][j]),
                        grid.failures[i][j] or ""])
    if metadata:
        with open(sidecar_path(path), "w") as fh:
            json.dump(grid.metadata, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
    return path


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_grid(path: str | Path) -> SweepGrid:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0][0] != "axis1" or rows[1][0] != "axis2":
        raise ValueError(f"{path} is not a grid file")
    names = (rows[0][1], rows[1][1])
    values = (np.array([float(v) for v in rows[0][2:]]), np.array([float(v) for v in rows[1][2:]]))
    n1, n2 = len(values[0]), len(values[1])
    nmse = np.full((n1, n2), np.nan)
    regime = [[None] * n2 for _ in range(n1)]
    failures = [[None] * n2 for _ in range(n1)]
    for row in rows[3:]:
        i, j = int(row[0]), int(row[1])
        if row[4]:
            nmse[i, j] = float(row[4])
        regime[i][j] = Regime.parse(row[6])
        failures[i][j] = row[7] or None
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    return SweepGrid(names, values, nmse, regime, failures, meta)


# --------------------------------------------------------------------------
# series

_SERIES_MAGIC = b"PRCSER1\n"


def series_header(spec: SeriesSpec | None, series: NormalizedSeries | None, n: int) -> dict:
    head = {"length": n}
    if spec is not None:
        head.update(spec.to_dict())
    if series is not None:
        head["raw_min"] = series.raw_min
        head["raw_max"] = series.raw_max
    return head


def write_series(values, path: str | Path, header: dict, binary: bool = False) -> Path:
    """Single-column text (``#`` JSON header) or binary float64 with a JSON header."""
    values = np.asarray(values, dtype=float)
    header = {**header, "length": len(values)}
    path = Path(path)
    if binary:
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(_SERIES_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(values.astype("<f8").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            for v in values:
                fh.write(repr(float(v)) + "\n")
    return path


def read_series(path: str | Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        start = fh.read(len(_SERIES_MAGIC))
        if start == _SERIES_MAGIC:
            (size,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(size))
            values = np.frombuffer(fh.read(), dtype="<f8").astype(float)
            return values, header
    header = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = json.loads(line[1:])
            else:
                values.append(float(line))
    return np.array(values, dtype=float), header


# --------------------------------------------------------------------------
# feature matrices

_FEAT_MAGIC = b"PRCFEAT1"


def write_features(matrix: np.ndarray, path: str | Path, mask: np.ndarray | None = None) -> Path:
    """Row-major float64 with a (rows, cols, mask) header."""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    rows, cols = matrix.shape
    mask = np.ones(cols, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != (cols,):
        raise ValueError("mask length must equal column count")
    with open(path, "wb") as fh:
        fh.write(_FEAT_MAGIC)
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(mask.astype(np.uint8).tobytes())
        fh.write(matrix.tobytes())
    return Path(path)


def read_features(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(len(_FEAT_MAGIC)) != _FEAT_MAGIC:
            raise ValueError(f"{path} is not a feature matrix file")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        mask = np.frombuffer(fh.read(cols), dtype=np.uint8).astype(bool)
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path} is truncated")
    return data.reshape(rows, cols).astype(float), mask


def write_features_csv(matrix: np.ndarray, path: str | Path) -> Path:
    np.savetxt(path, matrix, delimiter=",", fmt="%.17g")
    return Path(path)


# --------------------------------------------------------------------------
# readout models

def save_model(model: RidgeModel, path: str | Path) -> Path:
    arrays = {
        "weights": model.weights,
        "lam": np.array(model.lam),
        "intercept_column": np.array(model.intercept_column),
    }
    st = model.preprocess_state
    if st is not None:
        arrays.update(epsilon=np.array(st.epsilon), retained_mask=st.retained_mask,
                      column_means=st.column_means, column_stds=st.column_stds)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return Path(path)


def load_model(path: str | Path) -> RidgeModel:
    with np.load(path) as z:
        state = None
        if "retained_mask" in z:
            state = PreprocessState(float(z["epsilon"]), z["retained_mask"].astype(bool),
                                    z["column_means"], z["column_stds"])
        return RidgeModel(z["weights"], float(z["lam"]), state, bool(z["intercept_column"]))

