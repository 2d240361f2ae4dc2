"""Dynamical regime classification from the closed-form boundaries.

Thresholds for a parameter point:

* ``arnold_threshold``  1/2 |gamma21*delta1 + delta2|   (parametric branch appears)
* ``upper_boundary``    1/2 sqrt((1+delta1^2)(gamma21^2+delta2^2))  (trivial state
  loses stability)
* ``comb_condition``    2*delta1*delta2 <= -(1 + delta1^2 + 2*gamma21)

Between the two thresholds both branches are stable.  Comb coherence has no
closed form; it is judged from the spectrum of a simulated steady state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .envelope import (EnvelopeState, IntegratorConfig, ModelParams, Trajectory,
                       integrate, seed_state)
from .errors import InsufficientDataError


class RegimeLabel(enum.IntEnum):
    SUB_THRESHOLD = 0
    BISTABLE = 1
    PARAMETRIC_RESONANCE = 2
    FREQUENCY_COMB = 3

    @property
    def short(self) -> str:
        return _SHORT[self]


_SHORT = {
    RegimeLabel.SUB_THRESHOLD: "ST",
    RegimeLabel.BISTABLE: "BS",
    RegimeLabel.PARAMETRIC_RESONANCE: "PR",
    RegimeLabel.FREQUENCY_COMB: "FC",
}


class CombCharacter(str, enum.Enum):
    COHERENT = "coherent"
    CHAOTIC = "chaotic"


@dataclass(frozen=True)
class Regime:
    label: RegimeLabel
    comb_character: CombCharacter | None = None

    def __post_init__(self):
        if self.comb_character is not None and self.label != RegimeLabel.FREQUENCY_COMB:
            raise ValueError("comb_character only applies to FrequencyComb")

    def __str__(self) -> str:
        if self.comb_character is None:
            return self.label.short
        return f"{self.label.short}-{self.comb_character.value}"

    @classmethod
    def parse(cls, text: str) -> "Regime":
        head, _, tail = text.partition("-")
        label = {v: k for k, v in _SHORT.items()}[head]
        return cls(label, CombCharacter(tail) if tail else None)

    @property
    def is_chaotic_comb(self) -> bool:
        return self.comb_character == CombCharacter.CHAOTIC


def delta2(delta1: float, kappa: float) -> float:
    return delta1 / 2.0 + kappa


def arnold_threshold(params: ModelParams) -> float:
    return 0.5 * abs(params.gamma21 * params.delta1 + params.delta2)


def upper_boundary(params: ModelParams) -> float:
    return 0.5 * math.sqrt((1.0 + params.delta1 ** 2)
                           * (params.gamma21 ** 2 + params.delta2 ** 2))


def comb_condition(params: ModelParams) -> bool:
    d1, d2 = params.delta1, params.delta2
    return 2.0 * d1 * d2 <= -(1.0 + d1 ** 2 + 2.0 * params.gamma21)


def classify_regime(params: ModelParams, f: float) -> Regime:
    """Analytic label; ties go to the higher regime."""
    if f < 0:
        raise ValueError("drive amplitude must be non-negative")
    if f < arnold_threshold(params):
        return Regime(RegimeLabel.SUB_THRESHOLD)
    if f < upper_boundary(params):
        return Regime(RegimeLabel.BISTABLE)
    if comb_condition(params):
        return Regime(RegimeLabel.FREQUENCY_COMB)
    return Regime(RegimeLabel.PARAMETRIC_RESONANCE)


def spectral_line_fraction(samples, k: int = 16, halfwidth: int = 2) -> float:
    """Share of AC spectral energy held by the ``k`` strongest narrow peaks.

    A Hann window limits leakage; each peak claims its bin and ``halfwidth``
    bins either side.  A constant signal counts as fully coherent.
    """
    x = np.asarray(samples, dtype=np.complex128)
    x = x - x.mean()
    win = np.hanning(len(x))
    power = np.abs(np.fft.fft(x * win)) ** 2
    total = power.sum()
    if total <= 1e-300 * len(x):
        return 1.0
    n = len(power)
    work = power.copy()
    captured = 0.0
    for _ in range(k):
        i = int(np.argmax(work))
        if work[i] <= 0:
            break
        idx = np.arange(i - halfwidth, i + halfwidth + 1) % n
        captured += work[idx].sum()
        work[idx] = 0.0
    return float(captured / total)


def classify_comb_dynamics(traj: Trajectory, sample_window: float | None = None,
                           k: int = 16, threshold: float = 0.9) -> CombCharacter:
    """Coherent when the top-``k`` spectral lines of psi2 carry > ``threshold`` of AC energy.

    ``sample_window`` limits the analysis to the trailing window of that
    length; at least 4096 equally spaced samples are required.
    """
    tau, psi2 = traj.tau, traj.psi2
    if sample_window is not None:
        keep = tau >= tau[-1] - sample_window - 1e-12
        tau, psi2 = tau[keep], psi2[keep]
    if len(psi2) < 4096:
        raise InsufficientDataError(f"need >= 4096 samples, got {len(psi2)}")
    frac = spectral_line_fraction(psi2, k=k)
    return CombCharacter.COHERENT if frac > threshold else CombCharacter.CHAOTIC


@dataclass(frozen=True)
class CombProbe:
    """Settings for the steady-state simulation behind the comb discriminator."""

    transient: float = 200.0
    window: float = 409.6
    n_samples: int = 4096
    k: int = 16
    threshold: float = 0.9


def steady_trajectory(params: ModelParams, f: float, probe: CombProbe = CombProbe(),
                      integ: IntegratorConfig = IntegratorConfig(),
                      initial: EnvelopeState | None = None) -> Trajectory:
    """Constant-drive run from the seed; returns the post-transient window."""
    state = seed_state() if initial is None else initial
    warm = integrate(state, params, f, probe.transient, 1, integ)
    return integrate(warm.final_state(), params, f, probe.window, probe.n_samples, integ,
                     include_start=False)


def comb_dynamics_at(params: ModelParams, f: float, probe: CombProbe = CombProbe(),
                     integ: IntegratorConfig = IntegratorConfig()) -> CombCharacter:
    traj = steady_trajectory(params, f, probe, integ)
    return classify_comb_dynamics(traj, None, probe.k, probe.threshold)


def resolve_regime(params: ModelParams, f: float, probe: CombProbe | None = CombProbe(),
                   integ: IntegratorConfig = IntegratorConfig()) -> Regime:
    """Analytic label, with comb character filled in by simulation when ``probe`` is set."""
    regime = classify_regime(params, f)
    if regime.label != RegimeLabel.FREQUENCY_COMB or probe is None:
        return regime
    return Regime(regime.label, comb_dynamics_at(params, f, probe, integ))


AXES = ("f_avg", "delta1", "kappa", "gamma21")


def point_params(base: ModelParams, f: float, **overrides) -> tuple[ModelParams, float]:
    f = overrides.pop("f_avg", f)
    return replace(base, **overrides), f


def regime_grid(axis1: tuple[str, np.ndarray], axis2: tuple[str, np.ndarray],
                base: ModelParams, f: float = 0.0,
                probe: CombProbe | None = None) -> list[list[Regime]]:
    """Regime per cell; ``axis1`` indexes rows, ``axis2`` columns."""
    (n1, v1), (n2, v2) = axis1, axis2
    for name, vals in ((n1, v1), (n2, v2)):
        if name not in AXES:
            raise ValueError(f"unknown regime axis {name!r}")
        if np.any(np.diff(np.asarray(vals, dtype=float)) <= 0):
            raise ValueError(f"axis {name} must be strictly increasing")
    grid = []
    for a in v1:
        row = []
        for b in v2:
            p, ff = point_params(base, f, **{n1: float(a), n2: float(b)})
            row.append(resolve_regime(p, ff, probe) if probe else classify_regime(p, ff))
        grid.append(row)
    return grid
