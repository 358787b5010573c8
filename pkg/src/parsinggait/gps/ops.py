"""Label-map transforms, histograms and entropy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import NUM_CLASSES, GaitParsingSequence, InvalidFrameError, ParsingFrame


@dataclass(frozen=True, eq=False)
class LabelHistogram:
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or np.any(c < 0):
            raise ValueError("counts must be a 1-d array of non-negative integers")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def probabilities(self) -> np.ndarray:
        if self.total == 0:
            raise ValueError("empty histogram has no probabilities")
        return self.counts / self.total

    def __add__(self, other: "LabelHistogram") -> "LabelHistogram":
        n = max(len(self.counts), len(other.counts))
        a = np.zeros(n, dtype=np.int64)
        a[:len(self.counts)] += self.counts
        a[:len(other.counts)] += other.counts
        return LabelHistogram(a)

    def as_dict(self) -> dict[int, int]:
        return {k: int(v) for k, v in enumerate(self.counts) if v}


def label_histogram(target, num_classes: int | None = None) -> LabelHistogram:
    """Exact pixel counts per label for a frame or a whole sequence."""
    if isinstance(target, GaitParsingSequence):
        labels = target.to_array()
        k = target.num_classes
    elif isinstance(target, ParsingFrame):
        labels = target.labels
        k = target.num_classes
    else:
        raise TypeError(f"expected a ParsingFrame or GaitParsingSequence, got {type(target)!r}")
    k = num_classes or k
    return LabelHistogram(np.bincount(labels.reshape(-1), minlength=k))


def entropy_bits(hist: LabelHistogram) -> float:
    """Pixel-level Shannon entropy in bits; zero-probability labels contribute 0."""
    if hist.total <= 0:
        raise ValueError("entropy of an empty histogram is undefined")
    p = hist.counts[hist.counts > 0] / hist.total
    h = -float(np.sum(p * np.log2(p)))
    return h if h > 0 else 0.0


def resize_mask(frame: ParsingFrame, out_h: int, out_w: int) -> ParsingFrame:
    """Nearest-neighbour resampling of a label map.

    Output pixel (i, j) samples input row ``floor((i + 0.5) * H / out_h)`` and
    column ``floor((j + 0.5) * W / out_w)`` (pixel-centre alignment).
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be positive, got {out_h}x{out_w}")
    rows = nearest_indices(frame.height, out_h)
    cols = nearest_indices(frame.width, out_w)
    return ParsingFrame(frame.labels[np.ix_(rows, cols)], frame.num_classes)


def nearest_indices(n_in: int, n_out: int) -> np.ndarray:
    idx = ((2 * np.arange(n_out) + 1) * n_in) // (2 * n_out)
    return np.minimum(idx, n_in - 1)


def binarize(frame: ParsingFrame) -> ParsingFrame:
    return ParsingFrame((frame.labels > 0).astype(np.uint8), frame.num_classes)


def binarize_sequence(seq: GaitParsingSequence) -> GaitParsingSequence:
    return GaitParsingSequence(tuple(binarize(f) for f in seq.frames), seq.subject_id,
                               seq.sequence_id, seq.camera_id, seq.num_classes)


def one_hot(frame: ParsingFrame | np.ndarray, num_classes: int = NUM_CLASSES,
            dtype=np.float32) -> np.ndarray:
    """K×H×W indicator planes; also accepts an ...×H×W label array."""
    labels = frame.labels if isinstance(frame, ParsingFrame) else np.asarray(frame)
    if labels.size and int(labels.max()) >= num_classes:
        raise InvalidFrameError(f"label {int(labels.max())} not below K={num_classes}")
    eye = np.eye(num_classes, dtype=dtype)
    out = eye[labels]  # ...×H×W×K
    return np.ascontiguousarray(np.moveaxis(out, -1, -3))


def scalar_encode(frame: ParsingFrame | np.ndarray, num_classes: int = NUM_CLASSES,
                  dtype=np.float32) -> np.ndarray:
    """Single-channel intensity encoding label / (K - 1)."""
    labels = frame.labels if isinstance(frame, ParsingFrame) else np.asarray(frame)
    dtype = np.dtype(dtype)
    return (labels.astype(dtype) / dtype.type(num_classes - 1))[..., None, :, :]
