from __future__ import annotations

import math
from dataclasses import replace

import pytest

from fringelock.controller import RunSettings
from fringelock.drift import DriftConfig
from fringelock.hardware import DetectorConfig
from fringelock.plant import Plant, PlantConfig

ZERO_OFFSETS = tuple([0.0] * 128)


def circular_diff(a: float, b: float) -> float:
    """Signed phase difference a - b mapped to (-pi, pi]."""
    d = math.fmod(a - b, 2.0 * math.pi)
    if d <= -math.pi:
        d += 2.0 * math.pi
    elif d > math.pi:
        d -= 2.0 * math.pi
    return d


def quiet_drift(offsets=ZERO_OFFSETS) -> DriftConfig:
    return DriftConfig(laser_ou_sigma=0.0, path_walk_sigma=0.0, static_offsets=offsets)


def noiseless_plant(
    offsets=ZERO_OFFSETS,
    contrast: float = 1.0,
    input_rate: float = 1e10,
    seed: int = 0,
) -> Plant:
    """Deterministic plant: no drift, no shot noise, no dark counts.

    The default input rate makes count quantization (~1e-5 in visibility)
    negligible against every tolerance asserted on noiseless searches.
    """
    return Plant(
        PlantConfig(
            detector=DetectorConfig(
                input_rate=input_rate, dark_rate=0.0, shot_noise=False
            ),
            drift=quiet_drift(offsets),
            contrast=contrast,
            seed=seed,
        )
    )


def zero_noise_settings(**overrides) -> RunSettings:
    """Experiment settings whose runs are exactly reproducible by hand."""
    base = RunSettings(
        plant=PlantConfig(
            detector=DetectorConfig(shot_noise=False, dark_rate=0.0),
            drift=quiet_drift(),
            contrast=1.0,
        ),
    )
    return replace(base, **overrides) if overrides else base


@pytest.fixture
def quiet_offsets():
    return ZERO_OFFSETS
