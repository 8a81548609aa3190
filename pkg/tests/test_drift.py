import math

import numpy as np
import pytest

from fringelock.drift import DriftConfig, advance, initial_state, true_phase
from fringelock.hardware import select_delay

from conftest import ZERO_OFFSETS


def make_state(cfg, seed=0):
    return initial_state(cfg, np.random.default_rng(seed))


class TestAdvance:
    def test_zero_noise_fixed_point(self):
        cfg = DriftConfig(laser_ou_sigma=0.0, path_walk_sigma=0.0, static_offsets=ZERO_OFFSETS)
        state = make_state(cfg)
        rng = np.random.default_rng(1)
        for _ in range(100):
            advance(state, 0.01, cfg, rng)
        assert state.laser_eps == 0.0
        assert np.all(state.path_phases == 0.0)
        assert state.t == pytest.approx(1.0)

    def test_walk_increment_std(self):
        cfg = DriftConfig(laser_ou_sigma=0.0, path_walk_sigma=0.1, static_offsets=ZERO_OFFSETS)
        state = make_state(cfg)
        rng = np.random.default_rng(2)
        snapshots = [state.path_phases.copy()]
        for _ in range(1000):
            advance(state, 1.0, cfg, rng)
            snapshots.append(state.path_phases.copy())
        increments = np.diff(np.array(snapshots), axis=0).ravel()  # 128000 draws
        assert abs(increments.std() - 0.1) / 0.1 < 0.02

    def test_ou_stationary_std(self):
        sigma = 3.0e-9
        cfg = DriftConfig(
            laser_ou_sigma=sigma, laser_ou_tau=10.0, path_walk_sigma=0.0,
            static_offsets=ZERO_OFFSETS,
        )
        state = make_state(cfg)
        rng = np.random.default_rng(3)
        samples = np.empty(200_000)
        for i in range(samples.size):
            advance(state, 1.0, cfg, rng)
            samples[i] = state.laser_eps
        # discard the transient from eps(0) = 0
        assert abs(samples[1000:].std() - sigma) / sigma < 0.03

    def test_invalid_dt(self):
        cfg = DriftConfig(static_offsets=ZERO_OFFSETS)
        state = make_state(cfg)
        with pytest.raises(ValueError):
            advance(state, 0.0, cfg, np.random.default_rng(4))

    def test_determinism(self):
        cfg = DriftConfig()
        trajectories = []
        for _ in range(2):
            state = make_state(cfg, seed=5)
            rng = np.random.default_rng(6)
            trace = []
            for _ in range(50):
                advance(state, 0.001, cfg, rng)
                trace.append((state.laser_eps, state.path_phases.copy()))
            trajectories.append(trace)
        for (e1, p1), (e2, p2) in zip(*trajectories):
            assert e1 == e2
            assert np.array_equal(p1, p2)


class TestTruePhase:
    def test_balanced_path_immune_to_laser(self):
        cfg = DriftConfig(path_walk_sigma=0.0, static_offsets=ZERO_OFFSETS)
        state = make_state(cfg)
        state.laser_eps = 1e-6  # huge detuning
        assert true_phase(state, select_delay(0), cfg) == 0.0

    def test_longest_path_sensitivity(self):
        # 2*pi * 193.4 THz * 254 ns * 1e-9 detuning
        cfg = DriftConfig(static_offsets=ZERO_OFFSETS)
        state = make_state(cfg)
        state.laser_eps = 1e-9
        expected = 2.0 * math.pi * 193.4e12 * 254e-9 * 1e-9
        assert expected == pytest.approx(0.3086, abs=2e-4)
        assert true_phase(state, select_delay(127), cfg) == pytest.approx(expected, rel=1e-12)

    def test_decoupling_without_detuning(self):
        offsets = tuple(np.linspace(0.0, 6.0, 128))
        cfg = DriftConfig(path_walk_sigma=0.0, static_offsets=offsets)
        state = make_state(cfg)
        for idx in (0, 5, 64, 127):
            assert true_phase(state, select_delay(idx), cfg) == pytest.approx(
                offsets[idx], abs=1e-12
            )

    def test_monotone_sensitivity_in_delay(self):
        cfg = DriftConfig(path_walk_sigma=0.0, static_offsets=ZERO_OFFSETS)
        state = make_state(cfg)
        state.laser_eps = 1e-10  # small enough that no path wraps past pi
        phases = [true_phase(state, select_delay(i), cfg) for i in range(128)]
        shifts = [abs(p - phases[0]) for p in phases]
        assert all(b >= a for a, b in zip(shifts, shifts[1:]))

    def test_offsets_require_full_table(self):
        with pytest.raises(ValueError):
            DriftConfig(static_offsets=(0.0, 1.0))
