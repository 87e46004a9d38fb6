"""Builders for small TFRecord files carrying motion-dataset-style records."""

import math

from womd_ingest import tfrecord, wire, womd


def state_bytes(x, y, z=0.0, vx=0.0, vy=0.0, heading=0.0, length=4.6, width=1.9,
                valid=True) -> bytes:
    return b"".join(
        [
            wire.encode_double(womd.STATE_CENTER_X, x),
            wire.encode_double(womd.STATE_CENTER_Y, y),
            wire.encode_double(womd.STATE_CENTER_Z, z),
            wire.encode_float(womd.STATE_LENGTH, length),
            wire.encode_float(womd.STATE_WIDTH, width),
            wire.encode_float(womd.STATE_HEIGHT, 1.6),
            wire.encode_float(womd.STATE_HEADING, heading),
            wire.encode_float(womd.STATE_VELOCITY_X, vx),
            wire.encode_float(womd.STATE_VELOCITY_Y, vy),
            wire.encode_int(womd.STATE_VALID, 1 if valid else 0),
        ]
    )


def track_bytes(track_id, object_type, states) -> bytes:
    return b"".join(
        [wire.encode_int(womd.TRACK_ID, track_id), wire.encode_int(womd.TRACK_OBJECT_TYPE, object_type)]
        + [wire.encode_bytes(womd.TRACK_STATES, s) for s in states]
    )


def lane_feature_bytes(feature_id, points) -> bytes:
    point_blobs = [
        wire.encode_double(womd.POINT_X, x) + wire.encode_double(womd.POINT_Y, y)
        for x, y in points
    ]
    lane = b"".join(wire.encode_bytes(womd.LANE_POLYLINE, p) for p in point_blobs)
    return wire.encode_int(womd.MAP_FEATURE_ID, feature_id) + wire.encode_bytes(
        womd.MAP_FEATURE_LANE, lane
    )


def scenario_bytes(scenario_id, tracks, sdc_index, current_time_index, lanes,
                   n_steps) -> bytes:
    parts = [wire.encode_double(womd.SCENARIO_TIMESTAMPS, 0.1 * i) for i in range(n_steps)]
    parts += [wire.encode_bytes(womd.SCENARIO_TRACKS, t) for t in tracks]
    parts.append(wire.encode_string(womd.SCENARIO_ID, scenario_id))
    parts.append(wire.encode_int(womd.SCENARIO_SDC_TRACK_INDEX, sdc_index))
    parts += [wire.encode_bytes(womd.SCENARIO_MAP_FEATURES, lane) for lane in lanes]
    parts.append(wire.encode_int(womd.SCENARIO_CURRENT_TIME_INDEX, current_time_index))
    return b"".join(parts)


def driving_scenario(scenario_id="sample-0", n_steps=60, heading=0.3, speed=8.0,
                     current_time_index=10, invalid_steps=(), sdc_index=1) -> bytes:
    """A vehicle driving straight with a parallel mapped lane, plus bystanders."""
    cos_h, sin_h = math.cos(heading), math.sin(heading)
    sdv_states = []
    for step in range(n_steps):
        t = 0.1 * step
        sdv_states.append(
            state_bytes(
                x=100.0 + speed * t * cos_h,
                y=-40.0 + speed * t * sin_h,
                z=1.5,
                vx=speed * cos_h,
                vy=speed * sin_h,
                heading=heading,
                valid=step not in invalid_steps,
            )
        )
    walker = [state_bytes(x=90.0, y=-35.0, vx=1.0, length=0.8, width=0.8)] * n_steps
    tracks = [
        track_bytes(7, 2, walker),
        track_bytes(11, womd.OBJECT_TYPE_VEHICLE, sdv_states),
    ]
    lane_points = [
        (100.0 + speed * 0.1 * i * cos_h, -40.0 + speed * 0.1 * i * sin_h)
        for i in range(-20, n_steps + 20, 2)
    ]
    lanes = [
        lane_feature_bytes(1001, lane_points),
        lane_feature_bytes(1002, [(x, y + 3.5) for x, y in lane_points]),
    ]
    return scenario_bytes(scenario_id, tracks, sdc_index, current_time_index, lanes, n_steps)


def write_sample_tfrecord(path, records) -> None:
    tfrecord.write_records(path, records)
