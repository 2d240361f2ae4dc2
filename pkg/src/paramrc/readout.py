"""Linear ridge readout and one-step-ahead evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateError, InsufficientDataError
from .reservoir import PreprocessState


@dataclass(frozen=True)
class SplitSpec:
    washout: int = 200
    train_fraction: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.washout < 0:
            raise ValueError("washout must be >= 0")


@dataclass
class RidgeModel:
    weights: np.ndarray
    lam: float
    preprocess_state: PreprocessState | None = None
    # a constant ones column is appended after the retained features
    intercept_column: bool = False

    def design(self, raw: np.ndarray) -> np.ndarray:
        """Map raw feature rows to the design matrix the weights expect."""
        if self.preprocess_state is None:
            x = np.asarray(raw, dtype=float)
        else:
            x = self.preprocess_state.apply(raw)
        return add_bias(x) if self.intercept_column else x

    def predict_raw(self, raw: np.ndarray) -> np.ndarray:
        return predict(self, self.design(raw))


def add_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def make_targets(values) -> np.ndarray:
    """Next-step targets: ``y[n] = s[n+1]`` for rows 0..len-2."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    if len(values) < 2:
        raise InsufficientDataError("need at least 2 symbols to form a target")
    return values[1:].copy()


def split(features: np.ndarray, targets: np.ndarray, spec: SplitSpec = SplitSpec()):
    """Drop the washout rows, then split chronologically (train first).

    ``features`` may carry one more row than ``targets`` (the last symbol);
    extra trailing rows are ignored.
    """
    n = len(targets)
    if len(features) < n:
        raise ValueError("fewer feature rows than targets")
    usable = n - spec.washout
    if usable < 2:
        raise InsufficientDataError(
            f"{n} supervised rows leave {usable} after washout {spec.washout}")
    n_train = int(math.floor(spec.train_fraction * usable + 1e-9))
    if n_train < 1 or n_train >= usable:
        raise InsufficientDataError("split leaves an empty train or test set")
    lo, mid = spec.washout, spec.washout + n_train
    return (features[lo:mid], targets[lo:mid]), (features[mid:n], targets[mid:n])


def ridge_fit(x: np.ndarray, y: np.ndarray, lam: float = 1e-3) -> RidgeModel:
    """Solve (X^T X + lam I) beta = X^T y by Cholesky factorization."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError(f"shape mismatch: X {x.shape}, y {y.shape}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("non-finite entries in ridge inputs")
    gram = x.T @ x
    gram[np.diag_indices_from(gram)] += lam
    beta = scipy.linalg.solve(gram, x.T @ y, assume_a="pos", check_finite=False)
    return RidgeModel(beta, lam)


def predict(model: RidgeModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"design has {x.shape[-1]} columns, model expects {model.weights.shape[0]}")
    return x @ model.weights


def nmse(truth, prediction) -> float:
    """Squared error normalized by the spread of ``truth`` about its mean."""
    s = np.asarray(truth, dtype=float)
    p = np.asarray(prediction, dtype=float)
    if s.shape != p.shape or s.ndim != 1:
        raise ValueError("truth and prediction must be 1-D and equally long")
    if len(s) < 2:
        raise InsufficientDataError("need at least 2 points")
    denom = float(np.sum((s - s.mean()) ** 2))
    if denom == 0.0:
        raise DegenerateError("constant ground truth")
    return float(np.sum((s - p) ** 2) / denom)
