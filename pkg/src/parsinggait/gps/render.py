"""Binary PPM rendering of parsing frames."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .types import ParsingFrame

DEFAULT_PALETTE = {
    0: (0, 0, 0),
    1: (128, 0, 0),
    2: (255, 85, 0),
    3: (51, 170, 221),
    4: (0, 255, 255),
    5: (85, 255, 170),
    6: (170, 255, 85),
    7: (255, 255, 0),
    8: (255, 170, 0),
    9: (0, 0, 255),
    10: (85, 51, 0),
    11: (0, 119, 221),
}


def to_ppm_bytes(frame: ParsingFrame, palette=None) -> bytes:
    palette = DEFAULT_PALETTE if palette is None else palette
    present = np.unique(frame.labels)
    missing = [int(k) for k in present if int(k) not in palette]
    if missing:
        raise KeyError(f"palette has no colour for labels {missing}")
    lut = np.zeros((256, 3), dtype=np.uint8)
    for k, rgb in palette.items():
        lut[int(k)] = rgb
    pixels = lut[frame.labels]
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def render(frame: ParsingFrame, palette, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_ppm_bytes(frame, palette))
    return path
