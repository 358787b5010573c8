"""Parsing frames and gait parsing sequences."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NUM_CLASSES = 12

BACKGROUND = 0
HEAD = 1
TORSO = 2
LEFT_ARM = 3
RIGHT_ARM = 4
LEFT_HAND = 5
RIGHT_HAND = 6
LEFT_LEG = 7
RIGHT_LEG = 8
LEFT_FOOT = 9
RIGHT_FOOT = 10
DRESS = 11

PART_NAMES = (
    "background", "head", "torso", "left-arm", "right-arm", "left-hand",
    "right-hand", "left-leg", "right-leg", "left-foot", "right-foot", "dress",
)

# label permutation that exchanges left and right parts
MIRROR_LABELS = np.array([0, 1, 2, 4, 3, 6, 5, 8, 7, 10, 9, 11], dtype=np.uint8)


class InvalidFrameError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ParsingFrame:
    """An H×W grid of part labels (0 = background)."""

    labels: np.ndarray
    num_classes: int = NUM_CLASSES

    def __post_init__(self):
        arr = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise InvalidFrameError(f"frame must be a non-empty 2-d grid, got shape {arr.shape}")
        if not 1 <= self.num_classes <= 256:
            raise InvalidFrameError(f"class count {self.num_classes} outside 1..256")
        if arr.size and int(arr.max()) >= self.num_classes:
            raise InvalidFrameError(
                f"label {int(arr.max())} not below class count {self.num_classes}")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self):
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, ParsingFrame):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.labels, other.labels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GaitParsingSequence:
    frames: tuple
    subject_id: str = ""
    sequence_id: str = ""
    camera_id: str = ""
    num_classes: int = field(default=NUM_CLASSES)

    def __post_init__(self):
        frames = tuple(
            f if isinstance(f, ParsingFrame) else ParsingFrame(f, self.num_classes)
            for f in self.frames)
        if not frames:
            raise InvalidFrameError("a sequence needs at least one frame")
        shape = frames[0].shape
        for i, f in enumerate(frames):
            if f.shape != shape:
                raise InvalidFrameError(f"frame {i} has shape {f.shape}, expected {shape}")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_array(cls, labels: np.ndarray, **meta) -> "GaitParsingSequence":
        """Build from an N×H×W label array."""
        return cls(tuple(ParsingFrame(f, meta.get("num_classes", NUM_CLASSES)) for f in labels),
                   **meta)

    def to_array(self) -> np.ndarray:
        return np.stack([f.labels for f in self.frames])

    def __len__(self):
        return len(self.frames)

    @property
    def frame_shape(self):
        return self.frames[0].shape

    def __eq__(self, other):
        if not isinstance(other, GaitParsingSequence):
            return NotImplemented
        return (self.subject_id == other.subject_id
                and self.sequence_id == other.sequence_id
                and self.camera_id == other.camera_id
                and self.num_classes == other.num_classes
                and len(self.frames) == len(other.frames)
                and all(a == b for a, b in zip(self.frames, other.frames)))

    __hash__ = None
