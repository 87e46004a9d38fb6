"""Synthetic scenario generator: a desk-scale stand-in for real driving logs.

Each scenario follows one of four maneuvers: straight driving, a
constant-rate turn, a lane change, or braking along the lane.  The mapped
lane polyline always traces the *nominal* lane geometry, while the driven
path deviates from it in ways short-horizon rollout baselines miss: every
non-braking scenario carries a smooth lateral drift (in-lane correction up
to a full lane change, already underway at the anchor time) plus a gentle
speed trend and modulation.  Deviation magnitudes are drawn from narrow
bands, mirroring how real 2-second windows almost always contain an
adjustment of typical size; directions and signs vary per scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import (
    HISTORY_STEPS,
    HORIZON_STEPS,
    STEP_SECONDS,
    AgentState,
    Scenario,
)

MANEUVERS = ("straight", "turn", "lane_change", "brake")
DRIFT_ONSET = -0.5  # seconds before the anchor at which lateral drift starts
BRAKE_ONSET = -0.3  # seconds before the anchor at which deceleration starts


@dataclass
class SynthConfig:
    """Knobs for the generator; every field has a sensible default."""

    count: int = 200
    speed_min: float = 3.0
    speed_max: float = 12.0
    turn_rate_min: float = 0.08
    turn_rate_max: float = 0.30
    mix_straight: float = 0.25
    mix_turn: float = 0.25
    mix_lane_change: float = 0.25
    mix_brake: float = 0.25
    lateral_drift_min: float = 2.0  # lateral deviation band for straight/turn, meters
    lateral_drift_max: float = 2.6
    lane_change_offset_min: float = 2.0  # lateral deviation band for lane changes, meters
    lane_change_offset_max: float = 2.6
    brake_decel_min: float = 0.4
    brake_decel_max: float = 1.0
    lane_spacing: float = 2.0  # meters between lane samples along the nominal path
    pose_spread: float = 100.0  # start positions drawn from +-pose_spread meters
    heading_spread: float = math.pi  # start headings drawn from +-heading_spread
    noise_pos: float = 0.05  # std of history position jitter, meters
    noise_vel: float = 0.05  # std of history velocity jitter, m/s
    noise_heading: float = 0.01  # std of history heading jitter, radians
    future_wobble: float = 0.08  # max amplitude of the smooth future perturbation, meters
    speed_mod: float = 0.08  # max relative amplitude of the smooth speed modulation
    accel_bias_mean: float = 0.0  # m/s^2, mean of the per-scenario speed trend
    accel_bias_std: float = 0.12  # m/s^2, spread of the speed trend

    def mix(self) -> np.ndarray:
        weights = np.array(
            [self.mix_straight, self.mix_turn, self.mix_lane_change, self.mix_brake]
        )
        total = weights.sum()
        if total <= 0:
            raise ValueError("maneuver mix weights must sum to a positive value")
        return weights / total


def _drift_ramp(t: float) -> tuple[float, float]:
    """Smoothstep from the drift onset to the end of the horizon: (value, rate)."""
    span = HORIZON_STEPS * STEP_SECONDS - DRIFT_ONSET
    u = min(max((t - DRIFT_ONSET) / span, 0.0), 1.0)
    return u * u * (3 - 2 * u), 6 * u * (1 - u) / span


def _nominal_path(maneuver: str, v: float, omega: float, decel: float, drift: float):
    """(driven, lane) position/heading functions of nominal time.

    Time 0 is the current state; paths are defined on roughly [-2 s, +4 s]
    so both the history and an extended lane polyline can be sampled.  The
    lane function traces the mapped geometry, which never includes the
    lateral drift.
    """

    def straight(t):
        return np.array([v * t, 0.0]), 0.0

    def drifting_straight(t):
        ramp, rate = _drift_ramp(t)
        return np.array([v * t, drift * ramp]), math.atan2(drift * rate, v)

    if maneuver in ("straight", "lane_change"):
        return drifting_straight, straight

    if maneuver == "turn":
        radius = v / omega

        def arc(t):
            ang = omega * t
            return np.array([radius * math.sin(ang), radius * (1 - math.cos(ang))]), ang

        def drifting_arc(t):
            ang = omega * t
            base, _ = arc(t)
            ramp, rate = _drift_ramp(t)
            left = np.array([-math.sin(ang), math.cos(ang)])
            return base + drift * ramp * left, ang + math.atan2(drift * rate, v)

        return drifting_arc, arc

    if maneuver == "brake":
        # braking begins just before the anchor and holds after stopping
        def braking(t):
            tau = min(max(t - BRAKE_ONSET, 0.0), v / decel)
            if t <= BRAKE_ONSET:
                return np.array([v * t, 0.0]), 0.0
            x = v * BRAKE_ONSET + v * tau - 0.5 * decel * tau * tau
            return np.array([x, 0.0]), 0.0

        return braking, straight

    raise ValueError(f"unknown maneuver {maneuver!r}")


def _speed_at(maneuver: str, v: float, decel: float, t: float) -> float:
    if maneuver == "brake" and t > BRAKE_ONSET:
        return max(v - decel * (t - BRAKE_ONSET), 0.0)
    return v


def _maneuver_schedule(mix: np.ndarray, count: int, rng: np.random.Generator) -> list[str]:
    """Stratified maneuver assignment: quotas by largest remainder, shuffled.

    Keeps the realized histogram within one scenario of the configured mix
    for any seed, unlike independent draws.
    """
    quotas = np.floor(mix * count).astype(int)
    fractions = mix * count - quotas
    order = np.lexsort((np.arange(len(mix)), -fractions))
    for index in order[: count - quotas.sum()]:
        quotas[index] += 1
    schedule = [name for name, quota in zip(MANEUVERS, quotas) for _ in range(quota)]
    rng.shuffle(schedule)
    return schedule


def synth_generate(config: SynthConfig, seed: int) -> list[Scenario]:
    """Deterministically generate ``config.count`` scenarios from ``seed``."""
    rng = np.random.default_rng(seed)
    schedule = _maneuver_schedule(config.mix(), config.count, rng)
    scenarios = []
    for index in range(config.count):
        maneuver = schedule[index]
        v = rng.uniform(config.speed_min, config.speed_max)
        omega = rng.uniform(config.turn_rate_min, config.turn_rate_max) * rng.choice([-1.0, 1.0])
        decel = rng.uniform(config.brake_decel_min, config.brake_decel_max)
        if maneuver == "lane_change":
            drift = rng.uniform(config.lane_change_offset_min, config.lane_change_offset_max)
        elif maneuver == "brake":
            drift = 0.0
        else:
            drift = rng.uniform(config.lateral_drift_min, config.lateral_drift_max)
        drift *= rng.choice([-1.0, 1.0])

        base_xy = rng.uniform(-config.pose_spread, config.pose_spread, size=2)
        base_yaw = rng.uniform(-config.heading_spread, config.heading_spread)
        base_z = rng.uniform(-2.0, 2.0) if config.pose_spread > 0 else 0.0
        cos_y, sin_y = math.cos(base_yaw), math.sin(base_yaw)
        world = np.array([[cos_y, -sin_y], [sin_y, cos_y]])

        driven, lane_path = _nominal_path(maneuver, v, omega, decel, drift)
        yaw_rate = omega if maneuver == "turn" else 0.0
        length = float(rng.uniform(4.2, 5.2))
        width = float(rng.uniform(1.8, 2.1))

        # drivers never hold a rollout-perfect speed: a small per-scenario
        # trend plus a smooth modulation, both visible in the recent velocity
        # history
        if maneuver != "brake":
            mod_amp = rng.uniform(0.0, config.speed_mod)
            accel = rng.normal(config.accel_bias_mean, config.accel_bias_std)
            accel = max(accel, -0.3 * v)  # keep speeds comfortably positive
        else:
            mod_amp, accel = 0.0, 0.0
        mod_freq = rng.uniform(0.8, 2.0)
        mod_phase = rng.uniform(0.0, 2 * math.pi)

        def warp(t):
            # integral of 1 + mod_amp * sin(mod_freq * tau + mod_phase)
            # plus the linear speed trend accel * tau, in nominal-time units
            return (
                t
                + (mod_amp / mod_freq)
                * (math.cos(mod_phase) - math.cos(mod_freq * t + mod_phase))
                + 0.5 * accel * t * t / v
            )

        def warp_rate(t):
            return 1.0 + mod_amp * math.sin(mod_freq * t + mod_phase) + accel * t / v

        history = []
        for step in range(HISTORY_STEPS):
            t = (step - (HISTORY_STEPS - 1)) * STEP_SECONDS
            pos, local_heading = driven(warp(t))
            speed = _speed_at(maneuver, v, decel, t) * warp_rate(t)
            heading = base_yaw + local_heading + rng.normal(0.0, config.noise_heading)
            vel = world @ (
                speed * np.array([math.cos(local_heading), math.sin(local_heading)])
                + rng.normal(0.0, config.noise_vel, size=2)
            )
            xy = base_xy + world @ (pos + rng.normal(0.0, config.noise_pos, size=2))
            history.append(
                AgentState(
                    x=float(xy[0]),
                    y=float(xy[1]),
                    z=base_z,
                    vx=float(vel[0]),
                    vy=float(vel[1]),
                    yaw_rate=yaw_rate,
                    heading=float(heading),
                    length=length,
                    width=width,
                )
            )

        wobble_amp = rng.uniform(0.0, config.future_wobble)
        wobble_freq = rng.uniform(0.5, 1.5)
        wobble_phase = rng.uniform(0.0, 2 * math.pi, size=2)
        future = np.zeros((HORIZON_STEPS, 2))
        for step in range(HORIZON_STEPS):
            t = (step + 1) * STEP_SECONDS
            pos, _ = driven(warp(t))
            wobble = wobble_amp * np.sin(wobble_freq * t + wobble_phase)
            future[step] = base_xy + world @ (pos + wobble)

        lane_t = np.arange(-2.0, 4.0 + 1e-9, config.lane_spacing / max(v, 1.0))
        lane_rows = []
        for t in lane_t:
            pos, local_heading = lane_path(t)
            direction = world @ np.array([math.cos(local_heading), math.sin(local_heading)])
            lane_rows.append(np.concatenate([base_xy + world @ pos, direction]))

        scenarios.append(
            Scenario(
                scenario_id=f"{maneuver}-{seed}-{index:05d}",
                history=history,
                future=future,
                lane_vectors=np.array(lane_rows),
            )
        )
    return scenarios
