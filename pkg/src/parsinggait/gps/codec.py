"""GPSQ: run-length coded container for gait parsing sequences.

Layout (little-endian)::

    "GPSQ" | version u8 | K u8 | H u16 | W u16 | N u32
    N × ( run_count u32 | run_count × (label u8, length u32) )
    CRC32 u32 over every byte after the magic

Frames are scanned row-major. Identity metadata is not stored in the stream;
the dataset manifest carries it and ``decode_gps`` accepts it as keywords.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .._kernels import rle_decode, rle_encode
from .types import GaitParsingSequence, ParsingFrame

MAGIC = b"GPSQ"
VERSION = 1
_HEADER = struct.Struct("<BBHHI")
_RUN = np.dtype([("label", "u1"), ("length", "<u4")])


class CodecError(ValueError):
    """Base class for GPSQ encode/decode failures."""


class BadMagicError(CodecError):
    pass


class TruncatedStreamError(CodecError):
    pass


class MalformedStreamError(CodecError):
    pass


class CRCMismatchError(CodecError):
    pass


def encode_frame_runs(frame: ParsingFrame) -> bytes:
    values, lengths = rle_encode(frame.labels.reshape(-1))
    runs = np.empty(values.shape[0], dtype=_RUN)
    runs["label"] = values
    runs["length"] = lengths
    return struct.pack("<I", runs.shape[0]) + runs.tobytes()


def encode_gps(sequence: GaitParsingSequence) -> bytes:
    h, w = sequence.frame_shape
    for i, f in enumerate(sequence.frames):
        if f.shape != (h, w):
            raise CodecError(f"frame {i} has shape {f.shape}, expected {(h, w)}")
    if sequence.num_classes > 255 or h > 0xFFFF or w > 0xFFFF:
        raise CodecError("sequence dimensions exceed the GPSQ header fields")
    body = bytearray(_HEADER.pack(VERSION, sequence.num_classes, h, w, len(sequence.frames)))
    for f in sequence.frames:
        body += encode_frame_runs(f)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return MAGIC + bytes(body) + struct.pack("<I", crc)


def decode_gps(data: bytes, subject_id: str = "", sequence_id: str = "",
               camera_id: str = "") -> GaitParsingSequence:
    data = bytes(data)
    if len(data) < 4:
        raise TruncatedStreamError("stream shorter than the magic")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    pos = 4
    if len(data) < pos + _HEADER.size + 4:
        raise TruncatedStreamError("stream shorter than header and footer")
    version, k, h, w, n = _HEADER.unpack_from(data, pos)
    if version != VERSION:
        raise MalformedStreamError(f"unsupported GPSQ version {version}")
    if h == 0 or w == 0 or n == 0 or k == 0:
        raise MalformedStreamError(f"degenerate header K={k} H={h} W={w} N={n}")
    pos += _HEADER.size
    end = len(data) - 4
    total = h * w
    frames = np.empty((n, h, w), dtype=np.uint8)
    for i in range(n):
        if pos + 4 > end:
            raise TruncatedStreamError(f"stream ends before frame {i}")
        (count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        nbytes = count * _RUN.itemsize
        if pos + nbytes > end:
            raise TruncatedStreamError(f"stream ends inside the runs of frame {i}")
        runs = np.frombuffer(data, dtype=_RUN, count=count, offset=pos)
        pos += nbytes
        try:
            flat = rle_decode(np.ascontiguousarray(runs["label"]),
                              np.ascontiguousarray(runs["length"]), total)
        except ValueError as exc:
            raise MalformedStreamError(f"frame {i}: {exc}") from None
        if count and int(runs["label"].max()) >= k:
            raise MalformedStreamError(f"frame {i} holds a label not below K={k}")
        frames[i] = flat.reshape(h, w)
    if pos != end:
        raise MalformedStreamError(f"{end - pos} unexpected bytes before the footer")
    (crc,) = struct.unpack_from("<I", data, end)
    actual = zlib.crc32(data[4:end]) & 0xFFFFFFFF
    if crc != actual:
        raise CRCMismatchError(f"CRC mismatch: stored {crc:#010x}, computed {actual:#010x}")
    return GaitParsingSequence(tuple(ParsingFrame(f, k) for f in frames), subject_id=subject_id,
                               sequence_id=sequence_id, camera_id=camera_id, num_classes=k)


def write_gps(path, sequence: GaitParsingSequence):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_gps(sequence))


def read_gps(path, **meta) -> GaitParsingSequence:
    return decode_gps(Path(path).read_bytes(), **meta)
