"""Field-number schema for the motion-dataset scenario records this tool reads.

Numbers follow the dataset's published proto2 schema (scenario.proto /
map.proto).  Only the subset needed for ego-trajectory extraction is
mapped; unknown fields are skipped by construction of the wire decoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import wire

# Scenario
SCENARIO_TIMESTAMPS = 1  # repeated double
SCENARIO_TRACKS = 2  # repeated Track
SCENARIO_ID = 5  # string
SCENARIO_SDC_TRACK_INDEX = 6  # int32
SCENARIO_MAP_FEATURES = 8  # repeated MapFeature
SCENARIO_CURRENT_TIME_INDEX = 10  # int32

# Track
TRACK_ID = 1
TRACK_OBJECT_TYPE = 2  # enum; 1 = vehicle
TRACK_STATES = 3  # repeated ObjectState

# ObjectState
STATE_CENTER_X = 2  # double
STATE_CENTER_Y = 3  # double
STATE_CENTER_Z = 4  # double
STATE_LENGTH = 5  # float
STATE_WIDTH = 6  # float
STATE_HEIGHT = 7  # float
STATE_HEADING = 8  # float
STATE_VELOCITY_X = 9  # float
STATE_VELOCITY_Y = 10  # float
STATE_VALID = 11  # bool

# MapFeature (oneof feature_data)
MAP_FEATURE_ID = 1
MAP_FEATURE_LANE = 3  # LaneCenter

# LaneCenter
LANE_POLYLINE = 8  # repeated MapPoint

# MapPoint
POINT_X = 1  # double
POINT_Y = 2  # double

OBJECT_TYPE_VEHICLE = 1


@dataclass
class TrackState:
    x: float
    y: float
    z: float
    vx: float
    vy: float
    heading: float
    length: float
    width: float
    valid: bool


@dataclass
class ParsedScenario:
    scenario_id: str
    timestamps: list[float]
    current_time_index: int
    sdc_track_index: int
    sdc_states: list[TrackState]
    sdc_object_type: int
    lane_polylines: list[list[tuple[float, float]]] = field(default_factory=list)


def _first_int(fields, number, default=0):
    entries = fields.get(number)
    return wire.as_int(entries[0]) if entries else default


def _first_double(fields, number, default=0.0):
    entries = fields.get(number)
    return wire.as_double(entries[0]) if entries else default


def _first_float(fields, number, default=0.0):
    entries = fields.get(number)
    return wire.as_float(entries[0]) if entries else default


def parse_state(data: bytes) -> TrackState:
    fields = wire.decode_fields(data)
    return TrackState(
        x=_first_double(fields, STATE_CENTER_X),
        y=_first_double(fields, STATE_CENTER_Y),
        z=_first_double(fields, STATE_CENTER_Z),
        vx=_first_float(fields, STATE_VELOCITY_X),
        vy=_first_float(fields, STATE_VELOCITY_Y),
        heading=_first_float(fields, STATE_HEADING),
        length=_first_float(fields, STATE_LENGTH),
        width=_first_float(fields, STATE_WIDTH),
        valid=bool(_first_int(fields, STATE_VALID)),
    )


def parse_lane_polyline(lane_data: bytes) -> list[tuple[float, float]]:
    fields = wire.decode_fields(lane_data)
    points = []
    for entry in fields.get(LANE_POLYLINE, []):
        point_fields = wire.decode_fields(wire.as_bytes(entry))
        points.append(
            (_first_double(point_fields, POINT_X), _first_double(point_fields, POINT_Y))
        )
    return points


def parse_scenario(data: bytes) -> ParsedScenario:
    """Extract the ego track and lane polylines from one serialized record."""
    fields = wire.decode_fields(data)
    scenario_id = ""
    if SCENARIO_ID in fields:
        scenario_id = wire.as_bytes(fields[SCENARIO_ID][0]).decode("utf-8", "replace")
    sdc_index = _first_int(fields, SCENARIO_SDC_TRACK_INDEX, default=-1)
    tracks = fields.get(SCENARIO_TRACKS, [])
    sdc_states: list[TrackState] = []
    sdc_type = 0
    if 0 <= sdc_index < len(tracks):
        track_fields = wire.decode_fields(wire.as_bytes(tracks[sdc_index]))
        sdc_type = _first_int(track_fields, TRACK_OBJECT_TYPE)
        sdc_states = [
            parse_state(wire.as_bytes(entry)) for entry in track_fields.get(TRACK_STATES, [])
        ]
    polylines = []
    for entry in fields.get(SCENARIO_MAP_FEATURES, []):
        feature_fields = wire.decode_fields(wire.as_bytes(entry))
        for lane_entry in feature_fields.get(MAP_FEATURE_LANE, []):
            polyline = parse_lane_polyline(wire.as_bytes(lane_entry))
            if len(polyline) >= 2:
                polylines.append(polyline)
    return ParsedScenario(
        scenario_id=scenario_id,
        timestamps=wire.repeated_double(fields.get(SCENARIO_TIMESTAMPS, [])),
        current_time_index=_first_int(fields, SCENARIO_CURRENT_TIME_INDEX),
        sdc_track_index=sdc_index,
        sdc_states=sdc_states,
        sdc_object_type=sdc_type,
        lane_polylines=polylines,
    )


def lane_direction_samples(
    polylines: list[list[tuple[float, float]]], center: tuple[float, float], box: float
) -> list[tuple[float, float, float, float]]:
    """(px, py, dx, dy) rows for polyline points within a box around center.

    Directions are unit finite differences to the next point; zero-length
    segments are dropped.
    """
    rows = []
    cx, cy = center
    for polyline in polylines:
        for (x0, y0), (x1, y1) in zip(polyline[:-1], polyline[1:]):
            if abs(x0 - cx) > box or abs(y0 - cy) > box:
                continue
            dx, dy = x1 - x0, y1 - y0
            norm = math.hypot(dx, dy)
            if norm < 1e-9:
                continue
            rows.append((x0, y0, dx / norm, dy / norm))
    return rows
