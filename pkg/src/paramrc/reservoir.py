"""Drive encoding, symbol-by-symbol reservoir runs and feature extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchmarks import NormalizedSeries
from .envelope import (EnvelopeState, IntegratorConfig, ModelParams, run_piecewise,
                       seed_state)
from .errors import ConfigError, DegenerateError, DivergenceError, StepUnderflowError

DEFAULT_GAMMA1_SCALE = 2424.0
DEFAULT_DATA_RATE = 2424.0


@dataclass(frozen=True)
class EncodingConfig:
    """Operating point and timing of the drive encoding.

    ``symbol_duration`` is in normalized time; ``gamma1_scale`` (1/s) converts
    a data rate in symbols per second into it via
    ``symbol_duration = gamma1_scale / data_rate``.
    """

    f_avg: float
    delta_f: float = 0.0
    symbol_duration: float = DEFAULT_GAMMA1_SCALE / DEFAULT_DATA_RATE
    gamma1_scale: float = DEFAULT_GAMMA1_SCALE
    warmup_symbols: int = 50

    def __post_init__(self):
        if not self.symbol_duration > 0:
            raise ConfigError("symbol_duration must be positive")
        if self.delta_f < 0:
            raise ConfigError("delta_f must be non-negative")
        if self.f_avg - self.delta_f / 2 < 0:
            raise ConfigError(
                f"drive would go negative: f_avg={self.f_avg}, delta_f={self.delta_f}")
        if self.gamma1_scale <= 0:
            raise ConfigError("gamma1_scale must be positive")
        if self.warmup_symbols < 0:
            raise ConfigError("warmup_symbols must be >= 0")

    @classmethod
    def from_rate(cls, f_avg: float, delta_f: float = 0.0,
                  data_rate: float = DEFAULT_DATA_RATE,
                  gamma1_scale: float = DEFAULT_GAMMA1_SCALE,
                  warmup_symbols: int = 50) -> "EncodingConfig":
        if not data_rate > 0:
            raise ConfigError("data_rate must be positive")
        return cls(f_avg, delta_f, gamma1_scale / data_rate, gamma1_scale, warmup_symbols)

    @property
    def data_rate(self) -> float:
        return self.gamma1_scale / self.symbol_duration


@dataclass(frozen=True)
class FeatureConfig:
    n_virtual_nodes: int = 512
    n_fft: int = 512
    epsilon: float = 1e-10
    # columns whose log-compressed training std is at or below this are dropped
    zero_var_tol: float = 1e-6

    def __post_init__(self):
        if self.n_virtual_nodes < 1 or self.n_fft < 0:
            raise ConfigError("node counts must be positive")
        if self.n_fft > self.n_virtual_nodes:
            raise ConfigError("n_fft cannot exceed n_virtual_nodes")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")

    @property
    def dimension(self) -> int:
        return 2 * self.n_virtual_nodes + 2 * self.n_fft


def encode_symbol(s: float, cfg: EncodingConfig) -> float:
    """Drive amplitude ``f_avg + delta_f * (s - 0.5)`` for a symbol in [0, 1]."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"symbol {s} outside [0, 1]")
    return cfg.f_avg + cfg.delta_f * (s - 0.5)


def encode_series(values: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ValueError("symbols must lie in [0, 1]")
    return cfg.f_avg + cfg.delta_f * (values - 0.5)


def dft_magnitudes(node_samples, n_fft: int) -> np.ndarray:
    """|DFT| of the first ``n_fft`` bins of a complex sequence (no window, no padding).

    Accepts a 1-D sequence or a stack of sequences along the last axis.
    """
    x = np.asarray(node_samples, dtype=np.complex128)
    if n_fft > x.shape[-1]:
        raise ValueError("n_fft cannot exceed the number of samples")
    return np.abs(np.fft.fft(x, axis=-1)[..., :n_fft])


def node_features(nodes: np.ndarray, feat: FeatureConfig) -> np.ndarray:
    """Assemble raw feature rows from node samples of shape (n, N_v, 2)."""
    p1, p2 = nodes[..., 0], nodes[..., 1]
    return np.concatenate(
        [np.abs(p1) ** 2, np.abs(p2) ** 2,
         dft_magnitudes(p1, feat.n_fft), dft_magnitudes(p2, feat.n_fft)],
        axis=-1,
    )


@dataclass
class ReservoirRun:
    features: np.ndarray  # raw, shape (n_symbols, D)
    nodes: np.ndarray  # complex node samples, shape (n_symbols, N_v, 2)
    warm_state: EnvelopeState
    final_state: EnvelopeState


def warm_up(params: ModelParams, enc: EncodingConfig,
            integ: IntegratorConfig = IntegratorConfig(),
            initial: EnvelopeState | None = None) -> EnvelopeState:
    """Drive at constant ``f_avg`` for ``warmup_symbols`` periods from the seed."""
    state = seed_state() if initial is None else initial
    if enc.warmup_symbols == 0:
        return state
    drives = np.full(enc.warmup_symbols, enc.f_avg)
    _, final = run_piecewise(state, params, drives, enc.symbol_duration, 1, integ)
    return final


def run_reservoir(series: NormalizedSeries | np.ndarray, params: ModelParams,
                  enc: EncodingConfig, feat: FeatureConfig = FeatureConfig(),
                  integ: IntegratorConfig = IntegratorConfig(),
                  initial: EnvelopeState | None = None) -> ReservoirRun:
    """Warm up, then feed every symbol through the oscillator and extract features.

    The envelope state carries across symbols.  Node k of symbol n is sampled
    at ``tau_n + k*T/N_v`` for k = 1..N_v (start excluded, end included).
    """
    values = series.values if isinstance(series, NormalizedSeries) else np.asarray(series)
    if len(values) == 0:
        raise ValueError("series is empty")
    drives = encode_series(values, enc)
    try:
        warm = warm_up(params, enc, integ, initial)
    except (DivergenceError, StepUnderflowError) as exc:
        exc.symbol_index = -1
        raise
    nodes, final = run_piecewise(warm, params, drives, enc.symbol_duration,
                                 feat.n_virtual_nodes, integ)
    return ReservoirRun(node_features(nodes, feat), nodes, warm, final)


@dataclass
class PreprocessState:
    """Column statistics fitted on log-compressed training features."""

    epsilon: float
    retained_mask: np.ndarray
    column_means: np.ndarray
    column_stds: np.ndarray

    def apply(self, raw: np.ndarray) -> np.ndarray:
        x = np.log10(np.abs(np.asarray(raw, dtype=float)) + self.epsilon)
        if x.shape[-1] != self.retained_mask.shape[0]:
            raise ValueError(
                f"expected {self.retained_mask.shape[0]} columns, got {x.shape[-1]}")
        return (x[..., self.retained_mask] - self.column_means) / self.column_stds


def fit_preprocess(raw_train: np.ndarray, feat: FeatureConfig = FeatureConfig()) -> PreprocessState:
    raw_train = np.asarray(raw_train, dtype=float)
    if raw_train.ndim != 2 or raw_train.shape[0] < 2:
        raise ValueError("training matrix needs at least 2 rows")
    x = np.log10(np.abs(raw_train) + feat.epsilon)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    mask = std > feat.zero_var_tol
    if not mask.any():
        raise DegenerateError("every feature column has zero variance on the training set")
    return PreprocessState(feat.epsilon, mask, mean[mask], std[mask])


def preprocess(raw_train: np.ndarray, raw_test: np.ndarray,
               feat: FeatureConfig = FeatureConfig()):
    """Log-compress, then standardize both matrices with training statistics only."""
    state = fit_preprocess(raw_train, feat)
    return state.apply(raw_train), state.apply(raw_test), state


def symbol_duration_for_rate(data_rate: float, gamma1_scale: float = DEFAULT_GAMMA1_SCALE) -> float:
    if not data_rate > 0:
        raise ConfigError("data_rate must be positive")
    return gamma1_scale / data_rate
