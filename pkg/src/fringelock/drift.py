"""Time-varying true relative phase of the 128 delay paths.

Two disturbance channels:

* a common-mode laser frequency detuning, modelled as a mean-reverting
  Ornstein-Uhlenbeck process whose phase impact grows linearly with the
  path delay (long paths integrate the detuning over a longer imbalance),
* an independent per-path Gaussian random walk standing in for slow
  environmental drift (temperature, mounts, fiber stress).

Magnitudes are not given by the source system description; the defaults here
were tuned so that an uncompensated path degrades visibly within one second
while the 1 Hz recalibration holds the long-run visibility target (see
README, "Drift defaults").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hardware import NUM_DELAYS, DelaySelector
from .optics import canonical_phase

#: Optical carrier frequency, telecom C band.
DEFAULT_OPTICAL_FREQ_HZ = 193.4e12


@dataclass(frozen=True)
class DriftConfig:
    """Stochastic drift parameters.

    ``laser_ou_sigma`` is the stationary standard deviation of the fractional
    frequency detuning; ``laser_ou_tau`` its mean-reversion time. A detuning
    eps shifts path r by 2*pi * nu0 * delay_r * eps radians.
    ``static_offsets`` is either the string ``"random"`` (drawn uniform in
    [0, 2*pi) from the seeded offset stream at state creation) or an explicit
    sequence of 128 phases.
    """

    laser_ou_sigma: float = 4.0e-9
    laser_ou_tau: float = 30.0
    path_walk_sigma: float = 0.05
    optical_freq_hz: float = DEFAULT_OPTICAL_FREQ_HZ
    static_offsets: str | tuple[float, ...] = "random"

    def __post_init__(self) -> None:
        if self.laser_ou_sigma < 0.0 or self.path_walk_sigma < 0.0:
            raise ValueError("drift sigmas must be >= 0")
        if self.laser_ou_tau <= 0.0:
            raise ValueError(f"OU time constant must be positive, got {self.laser_ou_tau}")
        if self.optical_freq_hz <= 0.0:
            raise ValueError("optical frequency must be positive")
        if isinstance(self.static_offsets, str):
            if self.static_offsets != "random":
                raise ValueError(
                    f"static_offsets must be 'random' or 128 phases, got {self.static_offsets!r}"
                )
        elif len(self.static_offsets) != NUM_DELAYS:
            raise ValueError(
                f"static_offsets needs exactly {NUM_DELAYS} entries, got {len(self.static_offsets)}"
            )


@dataclass
class DriftState:
    """Mutable drift state advanced on the simulation clock."""

    t: float
    laser_eps: float
    path_phases: np.ndarray
    offsets: np.ndarray = field(repr=False)


def initial_state(cfg: DriftConfig, rng: np.random.Generator) -> DriftState:
    """State at t=0. Consumes the offset stream only when offsets are random."""
    if isinstance(cfg.static_offsets, str):
        offsets = rng.uniform(0.0, 2.0 * math.pi, size=NUM_DELAYS)
    else:
        offsets = np.array([canonical_phase(p) for p in cfg.static_offsets], dtype=float)
    return DriftState(
        t=0.0,
        laser_eps=0.0,
        path_phases=np.zeros(NUM_DELAYS),
        offsets=offsets,
    )


def advance(
    state: DriftState, dt: float, cfg: DriftConfig, rng: np.random.Generator
) -> DriftState:
    """Advance the drift state by ``dt`` seconds in place (and return it).

    The OU step uses the exact discretization, so chunking a span into
    several calls changes the realization but not the law. Draw order is
    fixed: one laser normal, then 128 path normals.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    decay = math.exp(-dt / cfg.laser_ou_tau)
    shock = math.sqrt(1.0 - decay * decay)
    state.laser_eps = state.laser_eps * decay + cfg.laser_ou_sigma * shock * rng.standard_normal()
    state.path_phases += cfg.path_walk_sigma * math.sqrt(dt) * rng.standard_normal(NUM_DELAYS)
    state.t += dt
    return state


def true_phase(state: DriftState, delay: DelaySelector, cfg: DriftConfig) -> float:
    """Current relative phase of the selected path, canonical in [0, 2*pi).

    The laser term scales with the path imbalance: 2*pi * nu0 * delay * eps.
    Path 0 (balanced arms) is immune to common-mode detuning by construction.
    """
    laser = (
        2.0 * math.pi
        * cfg.optical_freq_hz
        * (delay.delay_ns * 1e-9)
        * state.laser_eps
    )
    idx = delay.index
    return canonical_phase(state.offsets[idx] + state.path_phases[idx] + laser)
