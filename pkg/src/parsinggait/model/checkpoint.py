"""PGCK checkpoint container.

Layout (little-endian)::

    "PGCK" | version u8 | config_len u32 | config JSON (UTF-8)
    repeated: name_len u16 | name | dtype u8 | ndim u8 | ndim × dim u32 | raw values

dtype codes: 0 = float32, 1 = float64.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PGCK"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}


class CheckpointError(ValueError):
    pass


def dumps(config: dict, tensors: dict[str, np.ndarray]) -> bytes:
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    out = bytearray(MAGIC)
    out += struct.pack("<BI", VERSION, len(blob)) + blob
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        code = _CODES.get(arr.dtype)
        if code is None:
            raise CheckpointError(f"{name}: unsupported dtype {arr.dtype}")
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb)) + nb
        out += struct.pack("<BB", code, arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
    return bytes(out)


def loads(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if data[:4] != MAGIC:
        raise CheckpointError("not a PGCK checkpoint")
    try:
        version, n = struct.unpack_from("<BI", data, 4)
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        pos = 9
        config = json.loads(data[pos:pos + n].decode("utf-8"))
        pos += n
        tensors = {}
        while pos < len(data):
            (ln,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos:pos + ln].decode("utf-8")
            pos += ln
            code, ndim = struct.unpack_from("<BB", data, pos)
            pos += 2
            shape = struct.unpack_from(f"<{ndim}I", data, pos)
            pos += 4 * ndim
            dt = _DTYPES[code]
            count = int(np.prod(shape)) if ndim else 1
            nbytes = count * dt.itemsize
            if pos + nbytes > len(data):
                raise CheckpointError(f"truncated tensor {name!r}")
            arr = np.frombuffer(data, dtype=dt, count=count, offset=pos).reshape(shape)
            tensors[name] = arr.astype(dt.newbyteorder("="), copy=True)
            pos += nbytes
    except (struct.error, KeyError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    return config, tensors


def save(path, config: dict, tensors: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(config, tensors))
    return path


def load(path) -> tuple[dict, dict[str, np.ndarray]]:
    return loads(Path(path).read_bytes())


def save_model(path, model, extra_config: dict | None = None, extra_tensors=None) -> Path:
    config = {"model": model.config.to_dict()}
    if extra_config:
        config.update(extra_config)
    tensors = dict(model.state_dict())
    if extra_tensors:
        tensors.update(extra_tensors)
    return save(path, config, tensors)


def load_model(path):
    """Rebuild a :class:`ParsingGait` from a checkpoint; returns (model, config, tensors)."""
    from .config import ModelConfig
    from .network import ParsingGait

    config, tensors = load(path)
    if "model" not in config:
        raise CheckpointError("checkpoint has no model config")
    model = ParsingGait(ModelConfig.from_dict(config["model"]))
    model.load_state_dict({k: v for k, v in tensors.items() if not k.startswith("optim.")})
    model.eval()
    return model, config, tensors
