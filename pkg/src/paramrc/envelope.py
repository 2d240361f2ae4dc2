"""Slowly-varying envelope dynamics of the 2:1 parametrically coupled mode pair.

The two normalized complex amplitudes obey

    dpsi1/dtau = -i f - (1 + i delta1) psi1 + i psi2**2
    dpsi2/dtau = -(gamma21 + i delta2) psi2 + 2 i psi1 conj(psi2)

with delta2 = delta1/2 + kappa.  Integration uses the Dormand-Prince 5(4)
embedded pair with its 4th-order continuous extension, so samples land on
exactly the requested times regardless of the accepted step sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numba
import numpy as np

from .errors import DivergenceError, InvalidStateError, StepUnderflowError

# Seed for the warm-up: the parametric branch is unreachable from psi2 == 0.
SEED_PSI2 = 1e-3

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3

MIN_STEP = 1e-14


@dataclass(frozen=True)
class ModelParams:
    """Normalized oscillator parameters; ``delta2`` is always derived."""

    delta1: float
    kappa: float
    gamma21: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta1) and math.isfinite(self.kappa)):
            raise ValueError("detunings must be finite")
        if not (self.gamma21 > 0 and math.isfinite(self.gamma21)):
            raise ValueError(f"gamma21 must be positive, got {self.gamma21}")

    @property
    def delta2(self) -> float:
        return self.delta1 / 2.0 + self.kappa


@dataclass(frozen=True)
class EnvelopeState:
    psi1: complex
    psi2: complex
    tau: float = 0.0

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.psi1) and np.isfinite(self.psi2) and math.isfinite(self.tau)
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.psi1, self.psi2], dtype=np.complex128)


def seed_state(tau: float = 0.0) -> EnvelopeState:
    return EnvelopeState(0j, complex(SEED_PSI2), tau)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    initial_step: float = 1e-3
    max_step: float = 0.5
    blow_up_bound: float = 1e6
    # > 0 disables adaptivity and takes this many equal steps per call
    fixed_steps: int = 0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.initial_step <= self.max_step):
            raise ValueError("need 0 < initial_step <= max_step")
        if self.blow_up_bound <= 0:
            raise ValueError("blow_up_bound must be positive")
        if self.fixed_steps < 0:
            raise ValueError("fixed_steps must be >= 0")

    def tightened(self, factor: float = 10.0) -> "IntegratorConfig":
        return IntegratorConfig(
            rel_tol=self.rel_tol / factor,
            abs_tol=self.abs_tol / factor,
            initial_step=self.initial_step,
            max_step=self.max_step,
            blow_up_bound=self.blow_up_bound,
            fixed_steps=self.fixed_steps,
        )


@dataclass
class Trajectory:
    """States sampled at increasing times."""

    tau: np.ndarray
    psi: np.ndarray  # shape (n, 2), complex

    @property
    def psi1(self) -> np.ndarray:
        return self.psi[:, 0]

    @property
    def psi2(self) -> np.ndarray:
        return self.psi[:, 1]

    @property
    def samples(self) -> list[EnvelopeState]:
        return [EnvelopeState(complex(a), complex(b), float(t))
                for t, (a, b) in zip(self.tau, self.psi)]

    def final_state(self) -> EnvelopeState:
        return EnvelopeState(complex(self.psi[-1, 0]), complex(self.psi[-1, 1]),
                             float(self.tau[-1]))


# --------------------------------------------------------------------------
# numerical kernels

@numba.njit(cache=True)
def _rhs(p1, p2, f, d1, d2, g21):
    return (-1j * f - (1.0 + 1j * d1) * p1 + 1j * p2 * p2,
            -(g21 + 1j * d2) * p2 + 2j * p1 * np.conj(p2))


# Dormand-Prince 5(4) tableau (autonomous system, so the c nodes are unused)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176,
                                -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension (Hairer & Wanner, dopri5 contd5)
_D1 = -12715105075 / 11282082432
_D3 = 87487479700 / 32700410799
_D4 = -10690763975 / 1880347072
_D5 = 701980252875 / 199316789632
_D6 = -1453857185 / 822651844
_D7 = 69997945 / 29380423


@numba.njit(cache=True)
def _advance(y, f, d1, d2, g21, duration, offsets, out, h,
             rtol, atol, hmax, bound, fixed_steps):
    """Advance ``y`` in place over ``duration`` at constant drive ``f``.

    ``offsets`` are sorted sample times relative to the start, in
    (0, duration]; samples are written into ``out`` rows.  Returns
    ``(status, next_h)``.
    """
    p1 = y[0]
    p2 = y[1]
    t = 0.0
    n_out = offsets.shape[0]
    j = 0
    # skip samples at the start point
    while j < n_out and offsets[j] <= 0.0:
        out[j, 0] = p1
        out[j, 1] = p2
        j += 1

    if fixed_steps > 0:
        h = duration / fixed_steps
    elif h > hmax:
        h = hmax

    k1a, k1b = _rhs(p1, p2, f, d1, d2, g21)
    n_step = 0
    while t < duration:
        last = False
        if fixed_steps > 0:
            n_step += 1
            if n_step == fixed_steps:
                last = True
        elif t + h >= duration * (1.0 - 1e-15):
            last = True
        hs = (duration - t) if last else h

        a2 = p1 + hs * _A21 * k1a
        b2 = p2 + hs * _A21 * k1b
        k2a, k2b = _rhs(a2, b2, f, d1, d2, g21)
        a3 = p1 + hs * (_A31 * k1a + _A32 * k2a)
        b3 = p2 + hs * (_A31 * k1b + _A32 * k2b)
        k3a, k3b = _rhs(a3, b3, f, d1, d2, g21)
        a4 = p1 + hs * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
        b4 = p2 + hs * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
        k4a, k4b = _rhs(a4, b4, f, d1, d2, g21)
        a5 = p1 + hs * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
        b5 = p2 + hs * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
        k5a, k5b = _rhs(a5, b5, f, d1, d2, g21)
        a6 = p1 + hs * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a)
        b6 = p2 + hs * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b + _A65 * k5b)
        k6a, k6b = _rhs(a6, b6, f, d1, d2, g21)
        n1 = p1 + hs * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
        n2 = p2 + hs * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
        k7a, k7b = _rhs(n1, n2, f, d1, d2, g21)

        if not (np.isfinite(n1.real) and np.isfinite(n1.imag)
                and np.isfinite(n2.real) and np.isfinite(n2.imag)):
            if fixed_steps > 0:
                return STATUS_NONFINITE, h
            err = np.inf
        elif fixed_steps > 0:
            err = 0.0
        else:
            e1 = hs * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a + _E7 * k7a)
            e2 = hs * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b + _E7 * k7b)
            s1 = atol + rtol * max(abs(p1), abs(n1))
            s2 = atol + rtol * max(abs(p2), abs(n2))
            err = math.sqrt(0.5 * ((abs(e1) / s1) ** 2 + (abs(e2) / s2) ** 2))

        if err <= 1.0:
            t_new = duration if last else t + hs
            if j < n_out and offsets[j] <= t_new:
                dy1 = n1 - p1
                dy2 = n2 - p2
                bs1 = hs * k1a - dy1
                bs2 = hs * k1b - dy2
                r41 = dy1 - hs * k7a - bs1
                r42 = dy2 - hs * k7b - bs2
                r51 = hs * (_D1 * k1a + _D3 * k3a + _D4 * k4a + _D5 * k5a + _D6 * k6a + _D7 * k7a)
                r52 = hs * (_D1 * k1b + _D3 * k3b + _D4 * k4b + _D5 * k5b + _D6 * k6b + _D7 * k7b)
                while j < n_out and offsets[j] <= t_new:
                    if offsets[j] >= t_new:
                        out[j, 0] = n1
                        out[j, 1] = n2
                    else:
                        th = (offsets[j] - t) / hs
                        th1 = 1.0 - th
                        out[j, 0] = p1 + th * (dy1 + th1 * (bs1 + th * (r41 + th1 * r51)))
                        out[j, 1] = p2 + th * (dy2 + th1 * (bs2 + th * (r42 + th1 * r52)))
                    j += 1
            p1 = n1
            p2 = n2
            k1a = k7a
            k1b = k7b
            t = t_new
            if abs(p1) > bound or abs(p2) > bound:
                y[0] = p1
                y[1] = p2
                return STATUS_BLOWUP, h
            if fixed_steps == 0 and not last:
                fac = 0.9 * err ** -0.2 if err > 0.0 else 10.0
                h = hs * min(10.0, max(0.2, fac))
                if h > hmax:
                    h = hmax
        else:
            fac = 0.9 * err ** -0.2 if np.isfinite(err) else 0.1
            h = hs * min(1.0, max(0.1, fac))
            if h < MIN_STEP:
                y[0] = p1
                y[1] = p2
                return STATUS_UNDERFLOW, h
    y[0] = p1
    y[1] = p2
    return STATUS_OK, h


@numba.njit(cache=True)
def _run_symbols(y, drives, d1, d2, g21, duration, offsets, out, h,
                 rtol, atol, hmax, bound):
    """Hold each drive for one ``duration``, carrying the state across.

    ``out`` has shape (n_symbols, n_offsets, 2).  Returns
    ``(status, failing_symbol, h)``.
    """
    for n in range(drives.shape[0]):
        status, h = _advance(y, drives[n], d1, d2, g21, duration, offsets,
                             out[n], h, rtol, atol, hmax, bound, 0)
        if status != STATUS_OK:
            return status, n, h
    return STATUS_OK, -1, h


def _raise_for_status(status: int, where: str = ""):
    if status == STATUS_BLOWUP:
        raise DivergenceError(f"envelope amplitude exceeded blow-up bound{where}")
    if status == STATUS_UNDERFLOW:
        raise StepUnderflowError(f"step size fell below {MIN_STEP:g}{where}")
    if status == STATUS_NONFINITE:
        raise DivergenceError(f"non-finite state in fixed-step integration{where}")


# --------------------------------------------------------------------------
# public API

def rhs(state: EnvelopeState, params: ModelParams, f: float) -> tuple[complex, complex]:
    """Time derivative (dpsi1/dtau, dpsi2/dtau) at ``state`` under drive ``f``."""
    if not state.is_finite():
        raise InvalidStateError(f"non-finite envelope state {state}")
    if not (isinstance(f, (int, float, np.floating, np.integer)) and math.isfinite(f)):
        raise InvalidStateError(f"drive must be a finite real, got {f!r}")
    a, b = _rhs(complex(state.psi1), complex(state.psi2), float(f),
                params.delta1, params.delta2, params.gamma21)
    return complex(a), complex(b)


def subthreshold_fixed_point(params: ModelParams, f: float) -> EnvelopeState:
    """Trivial steady state psi1 = -i f / (1 + i delta1), psi2 = 0."""
    return EnvelopeState(-1j * f / (1 + 1j * params.delta1), 0j)


Drive = float | Callable[[float], float] | Sequence[tuple[float, float]]


def _drive_segments(drive, tau0: float, duration: float) -> list[tuple[float, float, float]]:
    """Split [tau0, tau0+duration] into (start, end, value) constant pieces.

    ``drive`` is a constant, or a list of ``(start_tau, value)`` breakpoints
    (value holds until the next breakpoint), or a callable returning the
    breakpoint list for a window via ``drive.segments(t0, t1)``.
    """
    t_end = tau0 + duration
    if np.isscalar(drive):
        return [(tau0, t_end, float(drive))]
    if hasattr(drive, "segments"):
        return list(drive.segments(tau0, t_end))
    points = sorted((float(t), float(v)) for t, v in drive)
    if not points or points[0][0] > tau0:
        raise ValueError("piecewise drive does not cover the integration start")
    segs = []
    for i, (t, v) in enumerate(points):
        nxt = points[i + 1][0] if i + 1 < len(points) else math.inf
        a, b = max(t, tau0), min(nxt, t_end)
        if b > a:
            segs.append((a, b, v))
    return segs


@dataclass
class PiecewiseDrive:
    """Drive that holds ``values[n]`` on [tau0 + n*period, tau0 + (n+1)*period)."""

    values: np.ndarray
    period: float
    tau0: float = 0.0

    def segments(self, t0: float, t1: float):
        n0 = int(math.floor((t0 - self.tau0) / self.period + 1e-12))
        out = []
        n = max(n0, 0)
        while True:
            a = max(t0, self.tau0 + n * self.period)
            b = min(t1, self.tau0 + (n + 1) * self.period)
            if a >= t1 or n >= len(self.values):
                break
            if b > a:
                out.append((a, b, float(self.values[n])))
            n += 1
        return out


def integrate(initial: EnvelopeState, params: ModelParams, drive: Drive,
              duration: float, n_samples: int,
              cfg: IntegratorConfig = IntegratorConfig(),
              include_start: bool = True) -> Trajectory:
    """Integrate from ``initial`` over ``duration`` and sample equally spaced states.

    With ``include_start`` the samples span both interval endpoints,
    otherwise they are ``tau0 + k*duration/n_samples`` for k = 1..n_samples.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not initial.is_finite():
        raise InvalidStateError(f"non-finite initial state {initial}")
    tau0 = float(initial.tau)
    if include_start and n_samples > 1:
        times = tau0 + duration * np.arange(n_samples) / (n_samples - 1)
    elif include_start:
        times = np.array([tau0 + duration])
    else:
        times = tau0 + duration * np.arange(1, n_samples + 1) / n_samples
    times[-1] = tau0 + duration

    y = initial.as_array()
    out = np.empty((n_samples, 2), dtype=np.complex128)
    h = cfg.initial_step
    segs = _drive_segments(drive, tau0, duration)
    # a sample on a boundary belongs to the segment that ends there
    owner = np.searchsorted(np.array([b for _, b, _ in segs]), times, side="left")
    owner = np.minimum(owner, len(segs) - 1)
    for s_i, (a, b, f) in enumerate(segs):
        if not math.isfinite(f):
            raise InvalidStateError(f"non-finite drive value {f}")
        idx = np.nonzero(owner == s_i)[0]
        offs = np.clip(times[idx] - a, 0.0, b - a)
        if s_i == len(segs) - 1 and len(idx) and idx[-1] == n_samples - 1:
            offs[-1] = b - a
        buf = np.empty((len(idx), 2), dtype=np.complex128)
        status, h = _advance(y, f, params.delta1, params.delta2, params.gamma21,
                             b - a, offs, buf, h, cfg.rel_tol, cfg.abs_tol,
                             cfg.max_step, cfg.blow_up_bound, cfg.fixed_steps)
        _raise_for_status(status, f" near tau={a:.6g}")
        out[idx] = buf
    return Trajectory(times, out)


def run_piecewise(initial: EnvelopeState, params: ModelParams, drives: np.ndarray,
                  period: float, n_nodes: int,
                  cfg: IntegratorConfig = IntegratorConfig()) -> tuple[np.ndarray, EnvelopeState]:
    """Hold ``drives[n]`` for one ``period`` each and sample ``n_nodes`` per period.

    Node k of a period sits at ``start + k*period/n_nodes`` for k = 1..n_nodes.
    Returns the node samples, shape (len(drives), n_nodes, 2), and the final state.
    """
    drives = np.ascontiguousarray(drives, dtype=np.float64)
    if not np.all(np.isfinite(drives)):
        raise InvalidStateError("non-finite drive value")
    offsets = period * np.arange(1, n_nodes + 1) / n_nodes
    offsets[-1] = period
    y = initial.as_array()
    out = np.empty((len(drives), n_nodes, 2), dtype=np.complex128)
    status, n_fail, _ = _run_symbols(y, drives, params.delta1, params.delta2,
                                     params.gamma21, float(period), offsets, out,
                                     cfg.initial_step, cfg.rel_tol, cfg.abs_tol,
                                     cfg.max_step, cfg.blow_up_bound)
    if status != 0:
        try:
            _raise_for_status(status, f" in symbol {n_fail}")
        except (DivergenceError, StepUnderflowError) as exc:
            exc.symbol_index = int(n_fail)
            raise
    final = EnvelopeState(complex(y[0]), complex(y[1]), initial.tau + period * len(drives))
    return out, final
