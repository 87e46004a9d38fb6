"""Run configuration: defaults, flat key=value config files, and hashing.

Precedence is command-line flags over config-file entries over defaults.
The resolved configuration is fingerprinted and the hash echoed into every
output artifact so downstream tools can detect mismatched runs; fields that
cannot change results (worker count, file locations) stay out of the hash.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .model import Architecture
from .synth import SynthConfig
from .training import SpsaConfig, config_fingerprint


@dataclass
class RunConfig:
    # data source: scenario JSONL path or "synthetic:<count>"
    scenario_source: str = ""
    seed: int = 0
    workers: int = 1

    # preprocessing frame
    scale: float = 10.0  # meters per normalized unit
    lane_radius: float = 20.0  # meters

    # architecture
    attention_layers: int = 6
    ffn_layers: int = 64
    n_modes: int = 16
    n_coeffs: int = 8
    residual_scale: float = 1.5
    horizon: int = 20

    # optimizer and training loop
    a: float = 0.05
    c: float = 0.1
    A: float = 80.0
    alpha: float = 0.602
    gamma: float = 0.101
    grad_averages: int = 2
    epochs: int = 100
    batches_per_epoch: int = 200
    batch_size: int = 32
    reg_weight: float = 1e-4
    init_std: float = 0.05
    val_fraction: float = 0.2

    # synthetic generator
    synth_speed_min: float = 3.0
    synth_speed_max: float = 12.0
    synth_turn_rate_min: float = 0.08
    synth_turn_rate_max: float = 0.30
    synth_mix_straight: float = 0.25
    synth_mix_turn: float = 0.25
    synth_mix_lane_change: float = 0.25
    synth_mix_brake: float = 0.25
    synth_lateral_drift_min: float = 2.0
    synth_lateral_drift_max: float = 2.6
    synth_lane_change_offset_min: float = 2.0
    synth_lane_change_offset_max: float = 2.6
    synth_brake_decel_min: float = 0.4
    synth_brake_decel_max: float = 1.0
    synth_lane_spacing: float = 2.0
    synth_pose_spread: float = 100.0
    synth_heading_spread: float = 3.141592653589793
    synth_noise_pos: float = 0.05
    synth_noise_vel: float = 0.05
    synth_noise_heading: float = 0.01
    synth_future_wobble: float = 0.08
    synth_speed_mod: float = 0.08
    synth_accel_bias_mean: float = 0.0
    synth_accel_bias_std: float = 0.12

    # excluded from the fingerprint: data location and parallelism cannot
    # change results, and the seed is echoed separately in every header
    UNHASHED = ("scenario_source", "workers", "seed")

    def architecture(self) -> Architecture:
        return Architecture(
            attention_layers=self.attention_layers,
            ffn_layers=self.ffn_layers,
            n_modes=self.n_modes,
            n_coeffs=self.n_coeffs,
            residual_scale=self.residual_scale,
            horizon=self.horizon,
        )

    def spsa(self) -> SpsaConfig:
        return SpsaConfig(
            a=self.a, c=self.c, A=self.A, alpha=self.alpha, gamma=self.gamma,
            grad_averages=self.grad_averages, epochs=self.epochs,
            batches_per_epoch=self.batches_per_epoch, batch_size=self.batch_size,
            reg_weight=self.reg_weight, init_std=self.init_std, seed=self.seed,
            val_fraction=self.val_fraction,
        )

    def synth(self, count: int) -> SynthConfig:
        return SynthConfig(
            count=count,
            speed_min=self.synth_speed_min,
            speed_max=self.synth_speed_max,
            turn_rate_min=self.synth_turn_rate_min,
            turn_rate_max=self.synth_turn_rate_max,
            mix_straight=self.synth_mix_straight,
            mix_turn=self.synth_mix_turn,
            mix_lane_change=self.synth_mix_lane_change,
            mix_brake=self.synth_mix_brake,
            lateral_drift_min=self.synth_lateral_drift_min,
            lateral_drift_max=self.synth_lateral_drift_max,
            lane_change_offset_min=self.synth_lane_change_offset_min,
            lane_change_offset_max=self.synth_lane_change_offset_max,
            brake_decel_min=self.synth_brake_decel_min,
            brake_decel_max=self.synth_brake_decel_max,
            lane_spacing=self.synth_lane_spacing,
            pose_spread=self.synth_pose_spread,
            heading_spread=self.synth_heading_spread,
            noise_pos=self.synth_noise_pos,
            noise_vel=self.synth_noise_vel,
            noise_heading=self.synth_noise_heading,
            future_wobble=self.synth_future_wobble,
            speed_mod=self.synth_speed_mod,
            accel_bias_mean=self.synth_accel_bias_mean,
            accel_bias_std=self.synth_accel_bias_std,
        )

    def fingerprint(self) -> str:
        hashed = {
            key: value for key, value in asdict(self).items() if key not in self.UNHASHED
        }
        return config_fingerprint(hashed)


def parse_config_file(path) -> dict[str, str]:
    """Read a flat ``key = value`` file; '#' starts a comment."""
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            entries[key] = value
    return entries


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise ValueError(f"unknown config key {key!r}")
    if isinstance(value, str):
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return value
    return value


def resolve_config(config_path=None, overrides: dict | None = None) -> RunConfig:
    """defaults <- config file <- explicit overrides."""
    merged: dict = {}
    if config_path is not None:
        for key, value in parse_config_file(config_path).items():
            merged[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = _coerce(key, value)
    return RunConfig(**merged)
