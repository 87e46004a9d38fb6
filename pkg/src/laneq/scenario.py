"""Scenario data model, lane-frame preprocessing, and motion baselines.

A raw ``Scenario`` holds 1.1 s of ego history, 2.0 s of future ground truth
and nearby lane-direction samples, all in world coordinates (meters).
Preprocessing turns it into an ``Example``: everything re-expressed in a
lane-aligned frame centered on the current pose, divided by a global scale,
paired with a rollout baseline and the per-step residual the model must
learn.

Scenario files are JSONL, one scenario per line:

    {"id": str,
     "history": [[x, y, z, vx, vy, yaw_rate, heading, length, width] x 11],
     "future": [[x, y] x 20],
     "lane_vectors": [[px, py, dx, dy] x k]}

with meters / seconds / radians throughout and (dx, dy) unit vectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

HISTORY_STEPS = 11
HORIZON_STEPS = 20
STEP_SECONDS = 0.1
FEATURE_NAMES = ("x", "y", "z", "vx", "vy", "yaw_rate", "heading", "length", "width")
MIN_SPEED_MPS = 0.05
STRAIGHT_YAW_RATE = 1e-6  # |yaw rate| below this is treated as straight-line motion
LANE_UNIT_TOL = 1e-6

DEFAULT_SCALE = 10.0  # meters per normalized unit
DEFAULT_LANE_RADIUS = 20.0  # meters, lane-direction query radius


@dataclass
class AgentState:
    """One ego state sample: pose, ground-plane velocity, rate, and footprint."""

    x: float
    y: float
    z: float
    vx: float
    vy: float
    yaw_rate: float
    heading: float
    length: float
    width: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.z, self.vx, self.vy, self.yaw_rate,
             self.heading, self.length, self.width]
        )

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def validate(self) -> None:
        values = self.as_array()
        if not np.all(np.isfinite(values)):
            raise ValueError(f"agent state has non-finite fields: {values}")
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"vehicle dimensions must be positive, got {self.length}x{self.width}")


@dataclass
class Scenario:
    """Raw forecasting instance: ego history, future ground truth, lane samples."""

    scenario_id: str
    history: list[AgentState]
    future: np.ndarray  # (20, 2) world positions
    lane_vectors: np.ndarray  # (k, 4) rows [px, py, dx, dy], possibly empty

    def validate(self) -> None:
        if len(self.history) != HISTORY_STEPS:
            raise ValueError(f"history must have {HISTORY_STEPS} states, got {len(self.history)}")
        for state in self.history:
            state.validate()
        future = np.asarray(self.future, dtype=float)
        if future.shape != (HORIZON_STEPS, 2):
            raise ValueError(f"future must be {HORIZON_STEPS}x2, got shape {future.shape}")
        if not np.all(np.isfinite(future)):
            raise ValueError("future contains non-finite positions")
        lanes = np.asarray(self.lane_vectors, dtype=float)
        if lanes.size:
            if lanes.ndim != 2 or lanes.shape[1] != 4:
                raise ValueError(f"lane_vectors must be kx4, got shape {lanes.shape}")
            if not np.all(np.isfinite(lanes)):
                raise ValueError("lane_vectors contain non-finite values")
            norms = np.hypot(lanes[:, 2], lanes[:, 3])
            bad = np.abs(norms - 1.0) > LANE_UNIT_TOL
            if np.any(bad):
                raise ValueError(
                    f"lane direction rows {np.nonzero(bad)[0].tolist()} are not unit vectors"
                )

    @property
    def current(self) -> AgentState:
        return self.history[-1]


@dataclass
class Example:
    """Preprocessed training instance in normalized lane-frame units.

    ``target_positions`` is stored rather than recomputed as
    baseline + target_residual: the stored copy keeps metrics on the
    residual decomposition bit-identical to metrics on the transformed
    ground truth (re-adding the subtraction can round by one ulp).
    """

    history: np.ndarray  # (11, 9) stacked transformed states
    baseline: np.ndarray  # (20, 2) rollout positions
    target_residual: np.ndarray  # (20, 2) ground-truth minus baseline
    target_positions: np.ndarray  # (20, 2) transformed ground-truth future
    lane_yaw: float
    scale: float
    origin: np.ndarray  # (3,) world position of the current state
    baseline_kind: str  # "lane" or "ctrv"
    scenario_id: str = ""


def wrap_angle(angle):
    """Wrap to (-pi, pi]."""
    wrapped = np.remainder(angle, 2.0 * np.pi)
    return np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)


def lane_orientation(s0: AgentState, lane_vectors, radius: float) -> float:
    """Reference yaw from the mean lane direction within ``radius`` of s0.

    Falls back to the current heading when no sample is in range or the
    in-range directions cancel out.
    """
    lanes = np.asarray(lane_vectors, dtype=float)
    if lanes.size == 0:
        return s0.heading
    near = np.hypot(lanes[:, 0] - s0.x, lanes[:, 1] - s0.y) <= radius
    if not np.any(near):
        return s0.heading
    mean_dir = lanes[near, 2:4].mean(axis=0)
    if np.hypot(mean_dir[0], mean_dir[1]) < 1e-12:
        return s0.heading
    return float(np.arctan2(mean_dir[1], mean_dir[0]))


def lane_available(s0: AgentState, lane_vectors, radius: float) -> bool:
    lanes = np.asarray(lane_vectors, dtype=float)
    if lanes.size == 0:
        return False
    return bool(np.any(np.hypot(lanes[:, 0] - s0.x, lanes[:, 1] - s0.y) <= radius))


def _rotation(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


def to_lane_frame(
    scenario: Scenario, lane_yaw: float, scale: float
) -> tuple[list[AgentState], np.ndarray]:
    """Re-express history and future in the lane-aligned normalized frame.

    Positions are shifted to the current pose, rotated by -lane_yaw, and
    divided by ``scale``; velocities are rotated and divided by ``scale``
    (not shifted); headings shift by -lane_yaw and wrap to (-pi, pi]; z is
    taken relative to the current z and scaled; yaw rate and the vehicle
    footprint pass through unchanged.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    s0 = scenario.current
    rot = _rotation(-lane_yaw)
    history = []
    for state in scenario.history:
        px, py = rot @ np.array([state.x - s0.x, state.y - s0.y]) / scale
        vx, vy = rot @ np.array([state.vx, state.vy]) / scale
        history.append(
            AgentState(
                x=float(px),
                y=float(py),
                z=(state.z - s0.z) / scale,
                vx=float(vx),
                vy=float(vy),
                yaw_rate=state.yaw_rate,
                heading=float(wrap_angle(state.heading - lane_yaw)),
                length=state.length,
                width=state.width,
            )
        )
    future = (np.asarray(scenario.future, dtype=float) - [s0.x, s0.y]) @ rot.T / scale
    return history, future


def transform_lane_vectors(lane_vectors, origin_xy, lane_yaw: float, scale: float) -> np.ndarray:
    """Lane samples in the normalized frame: positions transformed, directions rotated."""
    lanes = np.asarray(lane_vectors, dtype=float)
    if lanes.size == 0:
        return np.zeros((0, 4))
    rot = _rotation(-lane_yaw)
    out = np.empty_like(lanes)
    out[:, 0:2] = (lanes[:, 0:2] - origin_xy) @ rot.T / scale
    out[:, 2:4] = lanes[:, 2:4] @ rot.T
    return out


def inverse_transform_positions(points, origin_xy, lane_yaw: float, scale: float) -> np.ndarray:
    """Map normalized lane-frame positions back to world meters."""
    pts = np.asarray(points, dtype=float)
    return pts * scale @ _rotation(lane_yaw).T + origin_xy


def kinematic_baseline(
    s0: AgentState, v: float, omega: float, T: int = HORIZON_STEPS, dt: float = STEP_SECONDS
) -> np.ndarray:
    """Constant turn-rate-and-velocity rollout from s0's pose.

    Uses the closed-form arc integral, so points lie exactly on the circle of
    radius v/omega; |omega| < 1e-6 degenerates to straight-line motion.
    """
    if T < 1:
        raise ValueError(f"horizon must be at least 1 step, got {T}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t = np.arange(1, T + 1) * dt
    h0 = s0.heading
    if abs(omega) < STRAIGHT_YAW_RATE:
        x = s0.x + v * t * math.cos(h0)
        y = s0.y + v * t * math.sin(h0)
    else:
        x = s0.x + (v / omega) * (np.sin(h0 + omega * t) - math.sin(h0))
        y = s0.y - (v / omega) * (np.cos(h0 + omega * t) - math.cos(h0))
    return np.column_stack([x, y])


def lane_following_baseline(
    s0: AgentState,
    lane_vectors,
    v: float,
    T: int = HORIZON_STEPS,
    dt: float = STEP_SECONDS,
    radius: float = 2.0,
) -> np.ndarray:
    """Advance v*dt per step along the nearest in-range lane direction.

    If no lane sample is within ``radius`` mid-rollout the remaining steps
    continue as a constant turn-rate rollout from the current point (straight
    when the yaw rate is negligible).
    """
    lanes = np.asarray(lane_vectors, dtype=float)
    points = np.zeros((T, 2))
    pos = np.array([s0.x, s0.y], dtype=float)
    heading = s0.heading
    for step in range(T):
        dists = np.hypot(lanes[:, 0] - pos[0], lanes[:, 1] - pos[1]) if lanes.size else None
        if dists is None or dists.min() > radius:
            carry = AgentState(
                x=pos[0], y=pos[1], z=0.0, vx=0.0, vy=0.0,
                yaw_rate=s0.yaw_rate, heading=heading, length=1.0, width=1.0,
            )
            points[step:] = kinematic_baseline(carry, v, s0.yaw_rate, T - step, dt)
            break
        direction = lanes[int(np.argmin(dists)), 2:4]
        pos = pos + v * dt * direction
        heading = math.atan2(direction[1], direction[0])
        points[step] = pos
    return points


def build_example(
    scenario: Scenario,
    scale: float = DEFAULT_SCALE,
    lane_radius: float = DEFAULT_LANE_RADIUS,
) -> Example:
    """Run the full preprocessing pipeline on one scenario.

    Lane yaw, frame transform, baseline branch (lane-following when the ego
    is moving at >= 0.05 m/s and a lane sample is in range, constant-turn
    rollout otherwise), and residual targets.
    """
    scenario.validate()
    s0 = scenario.current
    yaw = lane_orientation(s0, scenario.lane_vectors, lane_radius)
    history, future = to_lane_frame(scenario, yaw, scale)
    s0_local = history[-1]
    speed_mps = s0.speed

    if speed_mps >= MIN_SPEED_MPS and lane_available(s0, scenario.lane_vectors, lane_radius):
        lanes_local = transform_lane_vectors(scenario.lane_vectors, [s0.x, s0.y], yaw, scale)
        baseline = lane_following_baseline(
            s0_local, lanes_local, speed_mps / scale, radius=lane_radius / scale
        )
        kind = "lane"
    else:
        baseline = kinematic_baseline(s0_local, speed_mps / scale, s0.yaw_rate)
        kind = "ctrv"

    return Example(
        history=np.vstack([s.as_array() for s in history]),
        baseline=baseline,
        target_residual=future - baseline,
        target_positions=future,
        lane_yaw=yaw,
        scale=scale,
        origin=np.array([s0.x, s0.y, s0.z]),
        baseline_kind=kind,
        scenario_id=scenario.scenario_id,
    )


# --- JSONL serialization ---------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "id": scenario.scenario_id,
        "history": [list(s.as_array()) for s in scenario.history],
        "future": np.asarray(scenario.future, dtype=float).tolist(),
        "lane_vectors": np.asarray(scenario.lane_vectors, dtype=float).reshape(-1, 4).tolist(),
    }


def scenario_from_dict(payload: dict) -> Scenario:
    try:
        history = [AgentState(*map(float, row)) for row in payload["history"]]
        scenario = Scenario(
            scenario_id=str(payload["id"]),
            history=history,
            future=np.asarray(payload["future"], dtype=float),
            lane_vectors=np.asarray(payload.get("lane_vectors", []), dtype=float).reshape(-1, 4),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scenario record: {exc}") from exc
    scenario.validate()
    return scenario


def write_scenarios(path, scenarios: Sequence[Scenario]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scenario in scenarios:
            fh.write(json.dumps(scenario_to_dict(scenario)) + "\n")


def read_scenarios(path) -> list[Scenario]:
    scenarios = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                scenarios.append(scenario_from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return scenarios
