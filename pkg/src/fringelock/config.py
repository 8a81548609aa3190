"""Configuration: defaults, INI files, and dotted-key overrides.

The on-disk format is a plain sections-of-key=value file (configparser
syntax), one section per subsystem. Every run echoes its effective
configuration back into the output directory; reloading that echo
reproduces the run byte for byte.
"""

from __future__ import annotations

import configparser
from dataclasses import replace
from pathlib import Path

from .calibration import CalibrationConfig, InitialStepPlan
from .controller import MODES, FrameSchedule, RunSettings
from .drift import DriftConfig
from .hardware import DetectorConfig, PmConfig
from .plant import PlantConfig


class ConfigError(ValueError):
    """Unknown key, malformed value, or inconsistent configuration."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated floats, got {text!r}") from exc


def _parse_offsets(text: str) -> str | tuple[float, ...]:
    if text.strip().lower() == "random":
        return "random"
    return _parse_float_list(text)


def _parse_mode(text: str) -> str:
    mode = text.strip()
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


_PARSERS = {
    ("run", "seconds"): int,
    ("run", "mode"): _parse_mode,
    ("run", "seed"): int,
    ("run", "output_dir"): str,
    ("schedule", "stab_duration_us"): int,
    ("schedule", "perm_slot_us"): int,
    ("schedule", "qkd_duration_us"): int,
    ("schedule", "switch_rate_hz"): int,
    ("pm", "v_min"): float,
    ("pm", "v_max"): float,
    ("pm", "v_pi"): float,
    ("pm", "dac_bits"): int,
    ("detector", "efficiency"): float,
    ("detector", "dark_rate"): float,
    ("detector", "input_rate"): float,
    ("detector", "shot_noise"): _parse_bool,
    ("optics", "contrast"): float,
    ("drift", "laser_ou_sigma"): float,
    ("drift", "laser_ou_tau"): float,
    ("drift", "path_walk_sigma"): float,
    ("drift", "optical_freq_hz"): float,
    ("drift", "static_offsets"): _parse_offsets,
    ("calibration", "ext_phases"): _parse_float_list,
    ("calibration", "coarse_interval"): float,
    ("calibration", "fine_interval"): float,
    ("calibration", "step_window_us"): int,
    ("calibration", "accept_threshold"): float,
}


def _values_from(settings: RunSettings, output_dir: str) -> dict[tuple[str, str], object]:
    p = settings.plant
    c = settings.calibration
    s = settings.schedule
    return {
        ("run", "seconds"): settings.seconds,
        ("run", "mode"): settings.mode,
        ("run", "seed"): settings.seed,
        ("run", "output_dir"): output_dir,
        ("schedule", "stab_duration_us"): s.stab_duration_us,
        ("schedule", "perm_slot_us"): s.perm_slot_us,
        ("schedule", "qkd_duration_us"): s.qkd_duration_us,
        ("schedule", "switch_rate_hz"): s.switch_rate_hz,
        ("pm", "v_min"): p.pm.v_min,
        ("pm", "v_max"): p.pm.v_max,
        ("pm", "v_pi"): p.pm.v_pi,
        ("pm", "dac_bits"): p.pm.dac_bits,
        ("detector", "efficiency"): p.detector.efficiency,
        ("detector", "dark_rate"): p.detector.dark_rate,
        ("detector", "input_rate"): p.detector.input_rate,
        ("detector", "shot_noise"): p.detector.shot_noise,
        ("optics", "contrast"): p.contrast,
        ("drift", "laser_ou_sigma"): p.drift.laser_ou_sigma,
        ("drift", "laser_ou_tau"): p.drift.laser_ou_tau,
        ("drift", "path_walk_sigma"): p.drift.path_walk_sigma,
        ("drift", "optical_freq_hz"): p.drift.optical_freq_hz,
        ("drift", "static_offsets"): p.drift.static_offsets,
        ("calibration", "ext_phases"): c.plan.ext_phases,
        ("calibration", "coarse_interval"): c.coarse_interval,
        ("calibration", "fine_interval"): c.fine_interval,
        ("calibration", "step_window_us"): c.step_window_us,
        ("calibration", "accept_threshold"): c.accept_threshold,
    }


def _build(values: dict[tuple[str, str], object]) -> tuple[RunSettings, str]:
    def get(section: str, key: str):
        return values[(section, key)]

    try:
        settings = RunSettings(
            plant=PlantConfig(
                pm=PmConfig(
                    v_min=get("pm", "v_min"),
                    v_max=get("pm", "v_max"),
                    v_pi=get("pm", "v_pi"),
                    dac_bits=get("pm", "dac_bits"),
                ),
                detector=DetectorConfig(
                    efficiency=get("detector", "efficiency"),
                    dark_rate=get("detector", "dark_rate"),
                    input_rate=get("detector", "input_rate"),
                    shot_noise=get("detector", "shot_noise"),
                ),
                drift=DriftConfig(
                    laser_ou_sigma=get("drift", "laser_ou_sigma"),
                    laser_ou_tau=get("drift", "laser_ou_tau"),
                    path_walk_sigma=get("drift", "path_walk_sigma"),
                    optical_freq_hz=get("drift", "optical_freq_hz"),
                    static_offsets=get("drift", "static_offsets"),
                ),
                contrast=get("optics", "contrast"),
                seed=get("run", "seed"),
            ),
            calibration=CalibrationConfig(
                plan=InitialStepPlan(ext_phases=tuple(get("calibration", "ext_phases"))),
                coarse_interval=get("calibration", "coarse_interval"),
                fine_interval=get("calibration", "fine_interval"),
                step_window_us=get("calibration", "step_window_us"),
                accept_threshold=get("calibration", "accept_threshold"),
            ),
            schedule=FrameSchedule(
                stab_duration_us=get("schedule", "stab_duration_us"),
                perm_slot_us=get("schedule", "perm_slot_us"),
                qkd_duration_us=get("schedule", "qkd_duration_us"),
                switch_rate_hz=get("schedule", "switch_rate_hz"),
            ),
            seconds=get("run", "seconds"),
            mode=get("run", "mode"),
            seed=get("run", "seed"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return settings, str(get("run", "output_dir"))


def default_values() -> dict[tuple[str, str], object]:
    return _values_from(RunSettings(), "out")


def load_config(
    path: str | Path | None = None, overrides: list[str] | None = None
) -> tuple[RunSettings, str]:
    """Effective configuration: defaults, then file, then --set overrides."""
    values = default_values()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(str(path))
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            for key, raw in parser.items(section):
                _set_value(values, section, key, raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key must be section.key, got {dotted!r}")
        section, key = dotted.split(".", 1)
        _set_value(values, section.strip(), key.strip(), raw.strip())
    return _build(values)


def _set_value(values: dict, section: str, key: str, raw: str) -> None:
    parser = _PARSERS.get((section, key))
    if parser is None:
        raise ConfigError(f"unknown configuration key [{section}] {key}")
    try:
        values[(section, key)] = parser(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from exc


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def write_config(settings: RunSettings, output_dir: str, path: str | Path) -> None:
    """Echo the effective configuration; reloading it reproduces the run."""
    values = _values_from(settings, output_dir)
    parser = configparser.ConfigParser(interpolation=None)
    for (section, key), value in values.items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, _format_value(value))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        parser.write(handle)


def override_settings(settings: RunSettings, **kwargs) -> RunSettings:
    """Apply run-level overrides (seconds, mode, seed) preserving validation."""
    updates = {k: v for k, v in kwargs.items() if v is not None}
    if not updates:
        return settings
    if "seed" in updates:
        settings = replace(settings, plant=replace(settings.plant, seed=updates["seed"]))
    return replace(settings, **updates)
