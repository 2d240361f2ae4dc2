"""Single-point runs and parameter sweeps over the full prediction pipeline."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .benchmarks import NormalizedSeries, SeriesSpec, System, benchmark_series
from .envelope import IntegratorConfig, ModelParams
from .errors import ConfigError, DegenerateError, DivergenceError, StepUnderflowError
from .readout import RidgeModel, SplitSpec, add_bias, make_targets, nmse, predict, ridge_fit, split
from .regimes import CombProbe, Regime, classify_regime, resolve_regime, steady_trajectory
from .reservoir import (DEFAULT_DATA_RATE, DEFAULT_GAMMA1_SCALE, EncodingConfig,
                        FeatureConfig, fit_preprocess, run_reservoir)

log = logging.getLogger(__name__)

SWEEP_AXES = ("f_avg", "delta1", "delta_f", "kappa", "gamma21", "data_rate")


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    steps: int
    log: bool = False

    def __post_init__(self):
        if self.name not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.name!r}; choose from {SWEEP_AXES}")
        if self.steps < 1:
            raise ConfigError("axis steps must be >= 1")
        if self.min > self.max:
            raise ConfigError("axis min must not exceed max")
        if self.steps > 1 and self.min == self.max:
            raise ConfigError("a multi-step axis needs min < max")
        if self.log and self.min <= 0:
            raise ConfigError("log-spaced axis needs positive bounds")

    @property
    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([float(self.min)])
        if self.log:
            return np.geomspace(self.min, self.max, self.steps)
        return np.linspace(self.min, self.max, self.steps)

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``name:min:max:steps[:log]``"""
        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise ConfigError(f"axis spec {text!r} is not name:min:max:steps[:log]")
        try:
            return cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]),
                       len(parts) == 5 and parts[4] == "log")
        except ValueError as exc:
            raise ConfigError(f"bad axis spec {text!r}: {exc}") from None

    def __str__(self) -> str:
        return f"{self.name}:{self.min!r}:{self.max!r}:{self.steps}" + (":log" if self.log else "")


@dataclass(frozen=True)
class BenchmarkConfig:
    """Shared series settings; per-system sampling intervals may be overridden."""

    n_points: int = 2000
    # series is lengthened until the test split holds this many points
    test_window: int = 1000
    transient_discard: int = 1000
    intervals: dict = field(default_factory=dict)

    def spec(self, system: System, split_spec: SplitSpec) -> SeriesSpec:
        n = max(self.n_points, required_length(self.test_window, split_spec))
        return SeriesSpec(system, n_points=n, transient_discard=self.transient_discard,
                          sample_interval=self.intervals.get(System(system).value))


def required_length(test_window: int, split_spec: SplitSpec) -> int:
    """Smallest series length whose test split has ``test_window`` points."""
    if test_window <= 0:
        return 0
    n = split_spec.washout + 2 + test_window
    while True:
        usable = n - 1 - split_spec.washout
        n_train = int(math.floor(split_spec.train_fraction * usable + 1e-9))
        if usable - n_train >= test_window:
            return n
        n += 1


@dataclass(frozen=True)
class ExperimentConfig:
    f_avg: float = 40.0
    delta1: float = -4.5
    kappa: float = -9.0
    gamma21: float = 1.0
    delta_f: float = 10.0
    data_rate: float = DEFAULT_DATA_RATE
    gamma1_scale: float = DEFAULT_GAMMA1_SCALE
    warmup_symbols: int = 50
    benchmarks: tuple[System, ...] = (System.MACKEY_GLASS, System.ROSSLER, System.LORENZ)
    map_benchmark: System = System.MACKEY_GLASS
    series: BenchmarkConfig = BenchmarkConfig()
    features: FeatureConfig = FeatureConfig()
    integrator: IntegratorConfig = IntegratorConfig()
    split: SplitSpec = SplitSpec()
    lam: float = 1e-3
    comb_probe: CombProbe | None = CombProbe()
    axes: tuple[Axis, ...] = ()
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "benchmarks", tuple(System(b) for b in self.benchmarks))
        object.__setattr__(self, "map_benchmark", System(self.map_benchmark))
        if len(self.axes) > 2:
            raise ConfigError("at most two sweep axes")
        if len({a.name for a in self.axes}) != len(self.axes):
            raise ConfigError("sweep axes must differ")
        if not self.lam > 0:
            raise ConfigError("lambda must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.data_rate > 0 or not self.gamma1_scale > 0:
            raise ConfigError("data_rate and gamma1_scale must be positive")
        ModelParams(self.delta1, self.kappa, self.gamma21)

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.delta1, self.kappa, self.gamma21)

    @property
    def encoding(self) -> EncodingConfig:
        return EncodingConfig.from_rate(self.f_avg, self.delta_f, self.data_rate,
                                        self.gamma1_scale, self.warmup_symbols)

    def series_spec(self, system: System) -> SeriesSpec:
        return self.series.spec(system, self.split)

    def at(self, **values) -> "ExperimentConfig":
        return replace(self, **values)


@dataclass
class BenchmarkResult:
    system: System
    nmse: float | None = None
    failure: str | None = None
    n_features: int = 0
    degenerate_features: bool = False
    truth: np.ndarray | None = None
    prediction: np.ndarray | None = None
    model: RidgeModel | None = None
    features: np.ndarray | None = None

    @property
    def log10_nmse(self) -> float | None:
        if self.nmse is None:
            return None
        return math.log10(self.nmse) if self.nmse > 0 else -math.inf


@dataclass
class PointResult:
    regime: Regime
    benchmarks: dict[System, BenchmarkResult]
    # steady-state |psi2|^2 trace at constant f_avg, and its spectrum
    trace_tau: np.ndarray | None = None
    trace_power: np.ndarray | None = None
    spectrum_freq: np.ndarray | None = None
    spectrum: np.ndarray | None = None

    @property
    def failed(self) -> bool:
        return any(b.failure for b in self.benchmarks.values())


def evaluate_series(series: NormalizedSeries, cfg: ExperimentConfig, system: System,
                    keep: bool = False) -> BenchmarkResult:
    """Reservoir, preprocessing, ridge fit and test NMSE for one series.

    Divergence is retried once with 10x tighter tolerances.  Cells with no
    usable feature column fall back to the intercept-only readout.
    """
    res = BenchmarkResult(system)
    try:
        enc = cfg.encoding
    except ConfigError as exc:
        res.failure = "invalid-config"
        log.debug("invalid cell: %s", exc)
        return res
    integ = cfg.integrator
    run = None
    for attempt in range(2):
        try:
            run = run_reservoir(series, cfg.model, enc, cfg.features, integ)
            break
        except (DivergenceError, StepUnderflowError) as exc:
            tag = "divergence" if isinstance(exc, DivergenceError) else "step-underflow"
            log.debug("attempt %d failed (%s): %s", attempt, tag, exc)
            res.failure = tag
            integ = integ.tightened(10.0)
    if run is None:
        return res
    res.failure = None

    targets = make_targets(series)
    (x_tr, y_tr), (x_te, y_te) = split(run.features, targets, cfg.split)
    try:
        state = fit_preprocess(x_tr, cfg.features)
        design_tr, design_te = add_bias(state.apply(x_tr)), add_bias(state.apply(x_te))
    except DegenerateError:
        state = None
        res.degenerate_features = True
        design_tr, design_te = np.ones((len(x_tr), 1)), np.ones((len(x_te), 1))
    model = ridge_fit(design_tr, y_tr, cfg.lam)
    model.preprocess_state = state
    model.intercept_column = True
    pred = predict(model, design_te)
    res.nmse = nmse(y_te, pred)
    res.n_features = design_tr.shape[1]
    if keep:
        res.truth, res.prediction, res.model = y_te, pred, model
        res.features = run.features
    return res


def cell_regime(cfg: ExperimentConfig) -> Regime:
    return resolve_regime(cfg.model, cfg.f_avg, cfg.comb_probe, cfg.integrator)


def run_point(cfg: ExperimentConfig, series: dict[System, NormalizedSeries] | None = None,
              keep: bool = True, traces: bool = True) -> PointResult:
    """Full pipeline at one operating point for every configured benchmark."""
    out = {}
    for system in cfg.benchmarks:
        s = series[system] if series and system in series else benchmark_series(
            cfg.series_spec(system))
        out[system] = evaluate_series(s, cfg, system, keep=keep)
    result = PointResult(cell_regime(cfg), out)
    if traces:
        probe = cfg.comb_probe or CombProbe()
        try:
            traj = steady_trajectory(cfg.model, cfg.f_avg, probe, cfg.integrator)
        except (DivergenceError, StepUnderflowError) as exc:
            log.warning("steady-state trace failed: %s", exc)
        else:
            power = np.abs(traj.psi2) ** 2
            dt = traj.tau[1] - traj.tau[0]
            result.trace_tau = traj.tau
            result.trace_power = power
            result.spectrum_freq = np.fft.rfftfreq(len(power), dt)
            result.spectrum = np.abs(np.fft.rfft(power - power.mean()))
    return result


@dataclass
class SweepGrid:
    """NMSE and regime per cell over two labeled axes (rows follow axis 1)."""

    axis_names: tuple[str, str]
    axis_values: tuple[np.ndarray, np.ndarray]
    nmse: np.ndarray  # float, NaN where failed
    regime: list[list[Regime]]
    failures: list[list[str | None]]
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.axis_values[0]), len(self.axis_values[1])

    @property
    def log10_nmse(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log10(self.nmse)

    @property
    def any_failure(self) -> bool:
        return any(f for row in self.failures for f in row)

    def regime_strings(self) -> np.ndarray:
        return np.array([[str(r) for r in row] for row in self.regime], dtype=object)

    def cells(self):
        for i in range(self.shape[0]):
            for j in range(self.shape[1]):
                yield i, j


def _grid_axes(cfg: ExperimentConfig) -> tuple[Axis, Axis]:
    axes = list(cfg.axes)
    if not axes:
        raise ConfigError("sweep needs at least one axis")
    if len(axes) == 1:
        # the fixed value of the other default axis becomes a singleton axis
        other = "delta1" if axes[0].name != "delta1" else "f_avg"
        v = getattr(cfg, other)
        axes.append(Axis(other, v, v, 1))
    return axes[0], axes[1]


def _cell_config(cfg: ExperimentConfig, a1: Axis, v1: float, a2: Axis, v2: float) -> ExperimentConfig:
    return replace(cfg, axes=(), workers=1, **{a1.name: float(v1), a2.name: float(v2)})


def _run_cell(args):
    cfg, series, system = args
    try:
        regime = cell_regime(cfg)
    except (DivergenceError, StepUnderflowError):
        regime = None
    res = evaluate_series(series, cfg, system)
    return regime, res.nmse, res.failure


def run_sweep(cfg: ExperimentConfig, series: NormalizedSeries | None = None,
              workers: int | None = None, progress=None) -> SweepGrid:
    """Evaluate ``run_point`` logic on every cell; all cells share one input series."""
    from .io import config_snapshot, environment_versions

    a1, a2 = _grid_axes(cfg)
    system = cfg.map_benchmark
    if series is None:
        series = benchmark_series(cfg.series_spec(system))
    v1, v2 = a1.values, a2.values
    tasks = [(_cell_config(cfg, a1, x, a2, y), series, system) for x in v1 for y in v2]
    workers = cfg.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = []
            for k, r in enumerate(pool.map(_run_cell, tasks, chunksize=1)):
                results.append(r)
                if progress:
                    progress(k + 1, len(tasks))
    else:
        results = []
        for k, t in enumerate(tasks):
            results.append(_run_cell(t))
            if progress:
                progress(k + 1, len(tasks))

    n1, n2 = len(v1), len(v2)
    values = np.full((n1, n2), np.nan)
    regimes, failures = [], []
    for i in range(n1):
        rrow, frow = [], []
        for j in range(n2):
            regime, value, failure = results[i * n2 + j]
            if regime is None:
                c = tasks[i * n2 + j][0]
                regime = classify_regime(c.model, c.f_avg)
            rrow.append(regime)
            frow.append(failure)
            if failure is None:
                values[i, j] = value
        regimes.append(rrow)
        failures.append(frow)
    meta = {
        "kind": "nmse",
        "benchmark": system.value,
        "series_sha256": series.digest(),
        "series_length": len(series),
        "config": config_snapshot(cfg),
        "versions": environment_versions(),
    }
    return SweepGrid((a1.name, a2.name), (v1, v2), values, regimes, failures, meta)


def regime_only_grid(cfg: ExperimentConfig) -> SweepGrid:
    """Regime labels on the sweep axes without running the reservoir."""
    from .io import config_snapshot, environment_versions

    a1, a2 = _grid_axes(cfg)
    v1, v2 = a1.values, a2.values
    regimes = [[cell_regime(_cell_config(cfg, a1, x, a2, y)) for y in v2] for x in v1]
    n1, n2 = len(v1), len(v2)
    meta = {"kind": "regime", "config": config_snapshot(cfg), "versions": environment_versions()}
    return SweepGrid((a1.name, a2.name), (v1, v2), np.full((n1, n2), np.nan), regimes,
                     [[None] * n2 for _ in range(n1)], meta)
