"""Chaotic benchmark series: Mackey-Glass, Rossler and Lorenz.

All generators use fixed-step RK4.  Mackey-Glass keeps a ring buffer of past
grid values and feeds the delayed term by linear interpolation (the half-step
stages fall midway between stored points).
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DegenerateError, DivergenceError


class System(str, enum.Enum):
    MACKEY_GLASS = "mackey_glass"
    ROSSLER = "rossler"
    LORENZ = "lorenz"


DEFAULT_PARAMS = {
    System.LORENZ: {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0},
    System.ROSSLER: {"a": 0.2, "b": 0.2, "c": 5.7},
    System.MACKEY_GLASS: {"beta": 0.2, "gamma": 0.1, "n": 10.0, "tau": 17.0},
}
DEFAULT_INIT = {
    System.LORENZ: (1.0, 1.0, 1.0),
    System.ROSSLER: (1.0, 1.0, 0.0),
    System.MACKEY_GLASS: (1.2,),  # constant history
}
DEFAULT_INTERVAL = {System.LORENZ: 0.1, System.ROSSLER: 1.0, System.MACKEY_GLASS: 1.0}
# RK4 steps per sample interval
DEFAULT_SUBSTEPS = {System.LORENZ: 20, System.ROSSLER: 20, System.MACKEY_GLASS: 10}


@dataclass(frozen=True)
class SeriesSpec:
    system: System
    n_points: int = 2000
    sample_interval: float | None = None
    transient_discard: int = 1000
    init: tuple[float, ...] | None = None
    params: dict = field(default_factory=dict)
    substeps: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "system", System(self.system))
        if self.n_points < 0 or self.transient_discard < 0:
            raise ValueError("counts must be non-negative")
        if self.interval <= 0:
            raise ValueError("sample_interval must be positive")
        if self.substeps is None:
            object.__setattr__(self, "substeps", DEFAULT_SUBSTEPS[self.system])
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def interval(self) -> float:
        if self.sample_interval is None:
            return DEFAULT_INTERVAL[self.system]
        return float(self.sample_interval)

    @property
    def coefficients(self) -> dict:
        return {**DEFAULT_PARAMS[self.system], **self.params}

    @property
    def initial(self) -> tuple[float, ...]:
        return tuple(self.init) if self.init is not None else DEFAULT_INIT[self.system]

    def to_dict(self) -> dict:
        return {
            "system": self.system.value,
            "n_points": self.n_points,
            "sample_interval": self.interval,
            "transient_discard": self.transient_discard,
            "init": list(self.initial),
            "params": self.coefficients,
            "substeps": self.substeps,
        }


@dataclass(frozen=True)
class NormalizedSeries:
    values: np.ndarray
    raw_min: float
    raw_max: float

    def __len__(self):
        return len(self.values)

    def denormalize(self, x):
        return self.raw_min + np.asarray(x) * (self.raw_max - self.raw_min)

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.values, dtype="<f8").tobytes()).hexdigest()


@numba.njit(cache=True)
def _lorenz(x, y, z, s, r, b):
    return s * (y - x), x * (r - z) - y, x * y - b * z


@numba.njit(cache=True)
def _rossler(x, y, z, a, b, c):
    return -y - z, x + a * y, b + z * (x - c)


@numba.njit(cache=True)
def _rk4_3d(kind, state, c0, c1, c2, dt, substeps, n_total):
    out = np.empty(n_total)
    x, y, z = state[0], state[1], state[2]
    for i in range(n_total):
        for _ in range(substeps):
            if kind == 0:
                ax, ay, az = _lorenz(x, y, z, c0, c1, c2)
                bx, by, bz = _lorenz(x + 0.5 * dt * ax, y + 0.5 * dt * ay, z + 0.5 * dt * az, c0, c1, c2)
                cx, cy, cz = _lorenz(x + 0.5 * dt * bx, y + 0.5 * dt * by, z + 0.5 * dt * bz, c0, c1, c2)
                dx, dy, dz = _lorenz(x + dt * cx, y + dt * cy, z + dt * cz, c0, c1, c2)
            else:
                ax, ay, az = _rossler(x, y, z, c0, c1, c2)
                bx, by, bz = _rossler(x + 0.5 * dt * ax, y + 0.5 * dt * ay, z + 0.5 * dt * az, c0, c1, c2)
                cx, cy, cz = _rossler(x + 0.5 * dt * bx, y + 0.5 * dt * by, z + 0.5 * dt * bz, c0, c1, c2)
                dx, dy, dz = _rossler(x + dt * cx, y + dt * cy, z + dt * cz, c0, c1, c2)
            x += dt / 6.0 * (ax + 2 * bx + 2 * cx + dx)
            y += dt / 6.0 * (ay + 2 * by + 2 * cy + dy)
            z += dt / 6.0 * (az + 2 * bz + 2 * cz + dz)
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
            return out[:i], False
        out[i] = x
    return out, True


@numba.njit(cache=True)
def _mg_rate(x, xd, beta, gamma, n):
    return beta * xd / (1.0 + xd ** n) - gamma * x


@numba.njit(cache=True)
def _mackey_glass(x0, beta, gamma, n, lag, dt, substeps, n_total):
    """RK4 on a grid of step ``dt``; ``lag`` grid steps equal the delay."""
    out = np.empty(n_total)
    size = lag + 1
    buf = np.full(size, x0)  # buf[k % size] holds x at grid step k - lag .. k
    x = x0
    k = 0
    for i in range(n_total):
        for _ in range(substeps):
            if lag == 0:
                k1 = _mg_rate(x, x, beta, gamma, n)
                xa = x + 0.5 * dt * k1
                k2 = _mg_rate(xa, xa, beta, gamma, n)
                xb = x + 0.5 * dt * k2
                k3 = _mg_rate(xb, xb, beta, gamma, n)
                xc = x + dt * k3
                k4 = _mg_rate(xc, xc, beta, gamma, n)
            else:
                d0 = buf[(k + 1) % size]  # x at step k - lag
                d1 = buf[(k + 2) % size] if lag > 1 else x
                dm = 0.5 * (d0 + d1)
                k1 = _mg_rate(x, d0, beta, gamma, n)
                k2 = _mg_rate(x + 0.5 * dt * k1, dm, beta, gamma, n)
                k3 = _mg_rate(x + 0.5 * dt * k2, dm, beta, gamma, n)
                k4 = _mg_rate(x + dt * k3, d1, beta, gamma, n)
            x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            k += 1
            buf[k % size] = x
        if not np.isfinite(x):
            return out[:i], False
        out[i] = x
    return out, True


def _check_zero(spec: SeriesSpec):
    return spec.n_points == 0


def gen_lorenz(spec: SeriesSpec) -> np.ndarray:
    """x-component of the Lorenz system after the transient."""
    if _check_zero(spec):
        return np.empty(0)
    c = spec.coefficients
    dt = spec.interval / spec.substeps
    total = spec.n_points + spec.transient_discard
    out, ok = _rk4_3d(0, np.asarray(spec.initial, dtype=float), c["sigma"], c["rho"],
                      c["beta"], dt, spec.substeps, total)
    if not ok:
        raise DivergenceError("Lorenz integration produced a non-finite state")
    return out[spec.transient_discard:]


def gen_rossler(spec: SeriesSpec) -> np.ndarray:
    """x-component of the Rossler system after the transient."""
    if _check_zero(spec):
        return np.empty(0)
    c = spec.coefficients
    dt = spec.interval / spec.substeps
    total = spec.n_points + spec.transient_discard
    out, ok = _rk4_3d(1, np.asarray(spec.initial, dtype=float), c["a"], c["b"], c["c"],
                      dt, spec.substeps, total)
    if not ok:
        raise DivergenceError("Rossler integration produced a non-finite state")
    return out[spec.transient_discard:]


def gen_mackey_glass(spec: SeriesSpec) -> np.ndarray:
    """Mackey-Glass series from a constant history ``init[0]``.

    The internal step (sample_interval / substeps) must divide the delay.
    """
    if _check_zero(spec):
        return np.empty(0)
    c = spec.coefficients
    dt = spec.interval / spec.substeps
    lag_f = c["tau"] / dt
    lag = int(round(lag_f))
    if lag < 0 or abs(lag - lag_f) > 1e-9 * max(1.0, lag_f):
        raise ValueError(f"internal step {dt} does not divide delay {c['tau']}")
    total = spec.n_points + spec.transient_discard
    out, ok = _mackey_glass(float(spec.initial[0]), c["beta"], c["gamma"], c["n"],
                            lag, dt, spec.substeps, total)
    if not ok:
        raise DivergenceError("Mackey-Glass integration produced a non-finite state")
    return out[spec.transient_discard:]


GENERATORS = {
    System.LORENZ: gen_lorenz,
    System.ROSSLER: gen_rossler,
    System.MACKEY_GLASS: gen_mackey_glass,
}


def generate(spec: SeriesSpec) -> np.ndarray:
    return GENERATORS[spec.system](spec)


def normalize_unit(raw) -> NormalizedSeries:
    """Affine map of ``raw`` onto [0, 1] using its global min and max."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or len(raw) < 2:
        raise ValueError("need a 1-D series with at least 2 points")
    lo, hi = float(raw.min()), float(raw.max())
    if not hi > lo:
        raise DegenerateError("constant series cannot be normalized")
    values = (raw - lo) / (hi - lo)
    return NormalizedSeries(values, lo, hi)


def benchmark_series(spec: SeriesSpec) -> NormalizedSeries:
    return normalize_unit(generate(spec))
