"""Interference physics of the two-port variable-delay interferometer.

Pure functions only: port intensities as a function of relative phase and
fringe contrast, plus the count-based visibility estimator. All stochastic
behaviour lives in the hardware and drift modules.
"""

from __future__ import annotations

import math
from typing import NamedTuple

TWO_PI = 2.0 * math.pi


class UndefinedVisibilityError(ValueError):
    """Raised when visibility is requested for a window with zero total counts."""


class PortIntensities(NamedTuple):
    """Optical power at the interferometer's two output ports."""

    i1: float
    i2: float

    @property
    def total(self) -> float:
        return self.i1 + self.i2


def canonical_phase(value: float) -> float:
    """Map a phase in radians to its canonical representative in [0, 2*pi).

    canonical_phase(x + 2*pi) == canonical_phase(x) up to float rounding.
    """
    r = math.fmod(value, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        # fmod of a tiny negative can round up to exactly 2*pi
        r = 0.0
    return r


def port_intensities(
    input_power: float, total_phase: float, contrast: float = 1.0
) -> PortIntensities:
    """Split input power over the two output ports at the given relative phase.

    Port 1 carries I/2 * (1 + v0*cos(phase)), port 2 the complement, so the
    two ports always sum to the input power (lossless split; detection losses
    are modelled downstream). ``contrast`` is the intrinsic fringe contrast
    v0 in [0, 1]; 1 is the ideal interferometer.
    """
    if input_power < 0.0:
        raise ValueError(f"input power must be >= 0, got {input_power}")
    if not 0.0 <= contrast <= 1.0:
        raise ValueError(f"contrast must lie in [0, 1], got {contrast}")
    x = contrast * math.cos(total_phase)
    half = 0.5 * input_power
    return PortIntensities(half * (1.0 + x), half * (1.0 - x))


def visibility(c1: float, c2: float) -> float:
    """Signed visibility (c1 - c2) / (c1 + c2) of one counting window.

    +1 means all counts at port 1; the sign is kept because the stabilization
    search maximizes toward +1 at port 1 and transient working points can sit
    on the negative side of the fringe.
    """
    total = c1 + c2
    if total <= 0:
        raise UndefinedVisibilityError(
            "visibility undefined for zero total counts; caller decides whether "
            "to skip the sample or flag a low-light fault"
        )
    return (c1 - c2) / total
