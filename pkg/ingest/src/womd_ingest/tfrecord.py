"""TFRecord framing: length-prefixed records with masked CRC32C checksums.

Record layout: uint64 little-endian payload length, masked CRC32C of those
8 bytes, the payload, masked CRC32C of the payload.  Pure Python; fast
enough for the record sizes this tool handles.
"""

from __future__ import annotations

import struct

_CRC_TABLE = []
_POLY = 0x82F63B78  # Castagnoli, reflected


def _build_table():
    for index in range(256):
        crc = index
        for _ in range(8):
            crc = (crc >> 1) ^ _POLY if crc & 1 else crc >> 1
        _CRC_TABLE.append(crc)


_build_table()


def crc32c(data: bytes) -> int:
    crc = 0xFFFFFFFF
    for byte in data:
        crc = _CRC_TABLE[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFF


def masked_crc32c(data: bytes) -> int:
    crc = crc32c(data)
    return (((crc >> 15) | (crc << 17)) + 0xA282EAD8) & 0xFFFFFFFF


class TfRecordError(ValueError):
    pass


def read_records(path) -> list[bytes]:
    """All record payloads of one file; checksums and framing are verified."""
    records = []
    with open(path, "rb") as fh:
        offset = 0
        while True:
            header = fh.read(8)
            if not header:
                break
            if len(header) < 8:
                raise TfRecordError(f"{path}: truncated length header at offset {offset}")
            (length,) = struct.unpack("<Q", header)
            (length_crc,) = struct.unpack("<I", fh.read(4))
            if masked_crc32c(header) != length_crc:
                raise TfRecordError(f"{path}: bad length checksum at offset {offset}")
            payload = fh.read(length)
            if len(payload) < length:
                raise TfRecordError(f"{path}: truncated payload at offset {offset}")
            (payload_crc,) = struct.unpack("<I", fh.read(4))
            if masked_crc32c(payload) != payload_crc:
                raise TfRecordError(f"{path}: bad payload checksum at offset {offset}")
            records.append(payload)
            offset += 16 + length
    return records


def write_records(path, payloads) -> None:
    with open(path, "wb") as fh:
        for payload in payloads:
            header = struct.pack("<Q", len(payload))
            fh.write(header)
            fh.write(struct.pack("<I", masked_crc32c(header)))
            fh.write(payload)
            fh.write(struct.pack("<I", masked_crc32c(payload)))
