"""Minimal protobuf wire-format primitives.

Just enough to read (and, for test fixtures, write) proto2 messages given a
table of field numbers: varints, fixed 32/64-bit scalars, and
length-delimited payloads.  No descriptors, no code generation; the schema
layer interprets raw fields by number.
"""

from __future__ import annotations

import struct

VARINT = 0
FIXED64 = 1
LENGTH_DELIMITED = 2
FIXED32 = 5


class WireError(ValueError):
    pass


def decode_varint(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise WireError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise WireError("varint too long")


def encode_varint(value: int) -> bytes:
    out = bytearray()
    while True:
        bits = value & 0x7F
        value >>= 7
        if value:
            out.append(bits | 0x80)
        else:
            out.append(bits)
            return bytes(out)


def decode_fields(data: bytes) -> dict[int, list[tuple[int, object]]]:
    """Raw field map: number -> [(wire_type, value), ...] in stream order.

    Varints come back as ints, fixed types as raw 4/8-byte chunks, and
    length-delimited fields as bytes.
    """
    fields: dict[int, list[tuple[int, object]]] = {}
    pos = 0
    while pos < len(data):
        key, pos = decode_varint(data, pos)
        number, wire_type = key >> 3, key & 0x7
        if wire_type == VARINT:
            value, pos = decode_varint(data, pos)
        elif wire_type == FIXED64:
            value, pos = data[pos : pos + 8], pos + 8
        elif wire_type == FIXED32:
            value, pos = data[pos : pos + 4], pos + 4
        elif wire_type == LENGTH_DELIMITED:
            length, pos = decode_varint(data, pos)
            value, pos = data[pos : pos + length], pos + length
            if len(value) < length:
                raise WireError(f"truncated length-delimited field {number}")
        else:
            raise WireError(f"unsupported wire type {wire_type} for field {number}")
        if wire_type in (FIXED64, FIXED32) and len(value) not in (4, 8):
            raise WireError(f"truncated fixed-width field {number}")
        fields.setdefault(number, []).append((wire_type, value))
    return fields


def as_double(entry: tuple[int, object]) -> float:
    wire_type, value = entry
    if wire_type != FIXED64:
        raise WireError(f"expected a double, got wire type {wire_type}")
    return struct.unpack("<d", value)[0]


def as_float(entry: tuple[int, object]) -> float:
    wire_type, value = entry
    if wire_type != FIXED32:
        raise WireError(f"expected a float, got wire type {wire_type}")
    return struct.unpack("<f", value)[0]


def as_int(entry: tuple[int, object]) -> int:
    wire_type, value = entry
    if wire_type != VARINT:
        raise WireError(f"expected a varint, got wire type {wire_type}")
    return int(value)


def as_bytes(entry: tuple[int, object]) -> bytes:
    wire_type, value = entry
    if wire_type != LENGTH_DELIMITED:
        raise WireError(f"expected a length-delimited field, got wire type {wire_type}")
    return value


def repeated_double(entries: list[tuple[int, object]]) -> list[float]:
    """Repeated doubles, accepting both unpacked and packed encodings."""
    values: list[float] = []
    for wire_type, value in entries:
        if wire_type == FIXED64:
            values.append(struct.unpack("<d", value)[0])
        elif wire_type == LENGTH_DELIMITED:
            if len(value) % 8:
                raise WireError("packed double run is not a multiple of 8 bytes")
            values.extend(struct.unpack(f"<{len(value) // 8}d", value))
        else:
            raise WireError(f"unexpected wire type {wire_type} in repeated double")
    return values


# --- encoding, used by the test fixtures and nowhere in the read path -------


def encode_tag(number: int, wire_type: int) -> bytes:
    return encode_varint((number << 3) | wire_type)


def encode_double(number: int, value: float) -> bytes:
    return encode_tag(number, FIXED64) + struct.pack("<d", value)


def encode_float(number: int, value: float) -> bytes:
    return encode_tag(number, FIXED32) + struct.pack("<f", value)


def encode_int(number: int, value: int) -> bytes:
    return encode_tag(number, VARINT) + encode_varint(value)


def encode_bytes(number: int, value: bytes) -> bytes:
    return encode_tag(number, LENGTH_DELIMITED) + encode_varint(len(value)) + value


def encode_string(number: int, value: str) -> bytes:
    return encode_bytes(number, value.encode("utf-8"))
