import math

import pytest

from fringelock.config import ConfigError, load_config, override_settings, write_config
from fringelock.controller import RunSettings


class TestLoadConfig:
    def test_defaults_without_file(self):
        settings, out_dir = load_config(None)
        assert settings == RunSettings()
        assert out_dir == "out"

    def test_file_values_override_defaults(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(
            "[run]\nseconds = 5\nseed = 42\nmode = open-loop\n"
            "[drift]\npath_walk_sigma = 0.0\n"
            "[calibration]\nfine_interval = 0.05\n"
        )
        settings, _ = load_config(path)
        assert settings.seconds == 5
        assert settings.seed == 42
        assert settings.mode == "open-loop"
        assert settings.plant.drift.path_walk_sigma == 0.0
        assert settings.calibration.fine_interval == 0.05

    def test_set_overrides_beat_file(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[run]\nseconds = 5\n")
        settings, _ = load_config(path, overrides=["run.seconds=9", "pm.v_pi=3.5"])
        assert settings.seconds == 9
        assert settings.plant.pm.v_pi == 3.5

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, overrides=["run.bogus=1"])

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, overrides=["run.seconds=soon"])

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, overrides=["run.mode=sideways"])

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.ini")

    def test_inconsistent_config_rejected(self):
        # 30 steps of 100 us do not change this; shrinking the slot does
        with pytest.raises(ConfigError):
            load_config(None, overrides=["calibration.step_window_us=200"])

    def test_offsets_accept_random_or_list(self):
        settings, _ = load_config(None, overrides=["drift.static_offsets=random"])
        assert settings.plant.drift.static_offsets == "random"
        explicit = ",".join(["0.5"] * 128)
        settings, _ = load_config(None, overrides=[f"drift.static_offsets={explicit}"])
        assert settings.plant.drift.static_offsets == tuple([0.5] * 128)

    def test_ext_phases_parse(self):
        settings, _ = load_config(
            None, overrides=["calibration.ext_phases=0.0, 1.0471975511965976, 3.141592653589793, 4.18879020478639"]
        )
        assert len(settings.calibration.plan.ext_phases) == 4
        assert not settings.calibration.plan.is_quadrature


class TestRoundTrip:
    def test_write_then_load_reproduces_settings(self, tmp_path):
        settings, _ = load_config(
            None,
            overrides=[
                "run.seconds=7",
                "run.seed=123",
                "drift.laser_ou_sigma=3.3e-09",
                "detector.shot_noise=false",
                "calibration.fine_interval=0.0125",
            ],
        )
        echo = tmp_path / "echo.ini"
        write_config(settings, "outdir", echo)
        reloaded, out_dir = load_config(echo)
        assert reloaded == settings
        assert out_dir == "outdir"

    def test_explicit_offsets_round_trip(self, tmp_path):
        offsets = ",".join(str(0.01 * i) for i in range(128))
        settings, _ = load_config(None, overrides=[f"drift.static_offsets={offsets}"])
        echo = tmp_path / "echo.ini"
        write_config(settings, "out", echo)
        reloaded, _ = load_config(echo)
        assert reloaded.plant.drift.static_offsets == settings.plant.drift.static_offsets


class TestOverrideSettings:
    def test_seed_reaches_the_plant(self):
        settings = override_settings(RunSettings(), seed=555)
        assert settings.seed == 555
        assert settings.plant.seed == 555

    def test_none_values_ignored(self):
        base = RunSettings()
        assert override_settings(base, seconds=None, mode=None, seed=None) == base
