"""Dataset-level part statistics."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .manifest import DatasetManifest
from .ops import LabelHistogram, entropy_bits, label_histogram
from .types import NUM_CLASSES, PART_NAMES, GaitParsingSequence


@dataclass
class SequenceStats:
    part_frames: np.ndarray       # frames containing each label
    distinct_parts: np.ndarray    # histogram of #parts present per frame
    num_frames: int
    pixel_counts: np.ndarray


def sequence_stats(seq: GaitParsingSequence, num_classes: int = NUM_CLASSES) -> SequenceStats:
    arr = seq.to_array().reshape(len(seq), -1)
    present = np.zeros((len(seq), num_classes), dtype=bool)
    rows = np.repeat(np.arange(len(seq)), arr.shape[1])
    present[rows, arr.reshape(-1)] = True
    parts = present[:, 1:]
    n_parts = parts.sum(axis=1)
    return SequenceStats(
        part_frames=present.sum(axis=0).astype(np.int64),
        distinct_parts=np.bincount(n_parts, minlength=num_classes).astype(np.int64),
        num_frames=len(seq),
        pixel_counts=label_histogram(seq, num_classes).counts.copy(),
    )


@dataclass
class DatasetStats:
    part_frame_counts: dict[str, int]
    distinct_part_histogram: list[int]
    mean_sequence_proportion: dict[str, float]
    num_sequences: int
    num_frames: int
    pixel_entropy_bits: float

    def to_dict(self):
        return {
            "num_sequences": self.num_sequences,
            "num_frames": self.num_frames,
            "part_frame_counts": self.part_frame_counts,
            "distinct_part_histogram": self.distinct_part_histogram,
            "mean_sequence_proportion_pct": self.mean_sequence_proportion,
            "pixel_entropy_bits": self.pixel_entropy_bits,
        }


def dataset_stats(manifest: DatasetManifest, threads: int = 1,
                  num_classes: int = NUM_CLASSES) -> DatasetStats:
    """Per-part frame occurrences, distinct-part-count histogram and mean
    within-sequence occurrence proportions (percent) over the whole manifest."""
    def one(entry):
        return sequence_stats(manifest.load(entry), num_classes)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            per_seq = list(pool.map(one, manifest.entries))
    else:
        per_seq = [one(e) for e in manifest.entries]
    if not per_seq:
        raise ValueError("manifest is empty")

    part_frames = sum(s.part_frames for s in per_seq)
    distinct = sum(s.distinct_parts for s in per_seq)
    pixels = sum(s.pixel_counts for s in per_seq)
    props = np.mean([s.part_frames / s.num_frames for s in per_seq], axis=0) * 100.0
    names = PART_NAMES[1:num_classes]
    return DatasetStats(
        part_frame_counts={n: int(part_frames[k + 1]) for k, n in enumerate(names)},
        distinct_part_histogram=[int(v) for v in distinct],
        mean_sequence_proportion={n: float(props[k + 1]) for k, n in enumerate(names)},
        num_sequences=len(per_seq),
        num_frames=int(sum(s.num_frames for s in per_seq)),
        pixel_entropy_bits=entropy_bits(LabelHistogram(pixels)),
    )
