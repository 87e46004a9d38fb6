"""TFRecord scenarios -> neutral scenario JSONL.

One JSONL line per valid ego window: 11 history states (9 features each),
20 future positions, and nearby lane-direction samples, all left in world
coordinates.  No geometry beyond extraction happens here; the consumer owns
the lane-frame transform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import tfrecord, womd

TOOL_VERSION = "0.1.0"
HISTORY_STEPS = 11
FUTURE_STEPS = 20
STEP_SECONDS = 0.1
LANE_BOX_M = 50.0
YAW_RATE_SOURCES = ("heading-diff", "velocity-diff")


@dataclass
class IngestManifest:
    source_files: list[str] = field(default_factory=list)
    records_scanned: int = 0
    windows_considered: int = 0
    scenarios_emitted: int = 0
    skipped: dict[str, int] = field(default_factory=dict)
    file_errors: dict[str, str] = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    def skip(self, reason: str) -> None:
        self.skipped[reason] = self.skipped.get(reason, 0) + 1

    def to_json(self) -> str:
        payload = {
            "source_files": self.source_files,
            "records_scanned": self.records_scanned,
            "windows_considered": self.windows_considered,
            "scenarios_emitted": self.scenarios_emitted,
            "skipped": dict(sorted(self.skipped.items())),
            "file_errors": dict(sorted(self.file_errors.items())),
            "tool_version": self.tool_version,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _wrap_angle(angle: float) -> float:
    wrapped = math.fmod(angle, 2.0 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    elif wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def _yaw_rate(states: list[womd.TrackState], index: int, source: str) -> float:
    """Finite-difference turn rate at one step.

    The published state schema carries no turn-rate field, so it is derived
    either from the heading channel or from the velocity direction.
    """
    if source not in YAW_RATE_SOURCES:
        raise ValueError(f"yaw_rate_source must be one of {YAW_RATE_SOURCES}, got {source!r}")

    def angle(state: womd.TrackState) -> float:
        if source == "heading-diff":
            return state.heading
        return math.atan2(state.vy, state.vx)

    prev = index - 1
    if prev >= 0 and states[prev].valid:
        return _wrap_angle(angle(states[index]) - angle(states[prev])) / STEP_SECONDS
    nxt = index + 1
    if nxt < len(states) and states[nxt].valid:
        return _wrap_angle(angle(states[nxt]) - angle(states[index])) / STEP_SECONDS
    return 0.0


def window_to_record(
    parsed: womd.ParsedScenario, anchor: int, yaw_rate_source: str
) -> dict | str:
    """One anchor window as a JSONL-ready dict, or a skip-reason string."""
    states = parsed.sdc_states
    if anchor - (HISTORY_STEPS - 1) < 0:
        return "short-history"
    if anchor + FUTURE_STEPS > len(states) - 1:
        return "short-future"
    window = states[anchor - (HISTORY_STEPS - 1) : anchor + FUTURE_STEPS + 1]
    if any(not s.valid for s in window):
        return "invalid-state"
    history_rows = []
    for offset in range(HISTORY_STEPS):
        index = anchor - (HISTORY_STEPS - 1) + offset
        state = states[index]
        row = [
            state.x, state.y, state.z, state.vx, state.vy,
            _yaw_rate(states, index, yaw_rate_source),
            state.heading, state.length, state.width,
        ]
        history_rows.append(row)
        if state.length <= 0 or state.width <= 0:
            return "invalid-state"
    future_rows = [[states[anchor + 1 + i].x, states[anchor + 1 + i].y] for i in range(FUTURE_STEPS)]
    flat = [v for row in history_rows for v in row] + [v for row in future_rows for v in row]
    if not all(math.isfinite(v) for v in flat):
        return "nonfinite"
    s0 = states[anchor]
    lanes = womd.lane_direction_samples(parsed.lane_polylines, (s0.x, s0.y), LANE_BOX_M)
    return {
        "id": f"{parsed.scenario_id or 'scenario'}@{anchor}",
        "history": history_rows,
        "future": future_rows,
        "lane_vectors": [list(row) for row in lanes],
    }


def convert(
    paths: list[str],
    out_path: str,
    stride: int = 0,
    limit: int = 0,
    yaw_rate_source: str = "heading-diff",
) -> IngestManifest:
    """Convert TFRecord files to scenario JSONL.

    ``stride=0`` emits one window per record at its canonical current-time
    anchor; a positive stride additionally slides the anchor across the
    track.  ``limit`` caps the number of emitted lines (0 = no cap).
    """
    manifest = IngestManifest(source_files=[str(p) for p in paths])
    emitted = 0
    with open(out_path, "w", encoding="utf-8") as out:
        for path in paths:
            try:
                records = tfrecord.read_records(path)
            except (OSError, tfrecord.TfRecordError) as exc:
                manifest.file_errors[str(path)] = str(exc)
                continue
            for payload in records:
                if limit and emitted >= limit:
                    break
                manifest.records_scanned += 1
                parsed = womd.parse_scenario(payload)
                if not parsed.sdc_states:
                    manifest.windows_considered += 1
                    manifest.skip("no-sdv-track")
                    continue
                anchors = [parsed.current_time_index]
                if stride > 0:
                    anchors = list(
                        range(HISTORY_STEPS - 1, len(parsed.sdc_states) - FUTURE_STEPS, stride)
                    ) or anchors
                for anchor in anchors:
                    if limit and emitted >= limit:
                        break
                    manifest.windows_considered += 1
                    result = window_to_record(parsed, anchor, yaw_rate_source)
                    if isinstance(result, str):
                        manifest.skip(result)
                        continue
                    out.write(json.dumps(result) + "\n")
                    emitted += 1
    manifest.scenarios_emitted = emitted
    return manifest
