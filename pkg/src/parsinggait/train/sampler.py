"""P×K batch sampling over in-memory training sequences."""
from __future__ import annotations

import numpy as np


class SequencePool:
    """Training sequences grouped by subject, held as uint8 N×H×W arrays."""

    def __init__(self, arrays, subjects):
        if len(arrays) != len(subjects):
            raise ValueError("one subject per sequence is required")
        if not arrays:
            raise ValueError("the training split is empty")
        self.arrays = [np.asarray(a, dtype=np.uint8) for a in arrays]
        self.subjects = list(subjects)
        self.subject_ids = sorted(set(self.subjects))
        self.label_of = {s: i for i, s in enumerate(self.subject_ids)}
        self.by_subject = {s: [i for i, t in enumerate(self.subjects) if t == s]
                           for s in self.subject_ids}

    @classmethod
    def from_manifest(cls, manifest, subset="train"):
        entries = manifest.subset(subset)
        if not entries:
            raise ValueError(f"the {subset} split is empty")
        return cls([manifest.load(e).to_array() for e in entries], [e.subject_id for e in entries])

    def __len__(self):
        return len(self.arrays)


def crop_window(seq: np.ndarray, length: int, rng) -> np.ndarray:
    """Random contiguous window; shorter sequences repeat cyclically from a random start."""
    n = seq.shape[0]
    if n >= length:
        start = int(rng.integers(0, n - length + 1))
        return seq[start:start + length]
    start = int(rng.integers(0, n))
    return seq[(start + np.arange(length)) % n]


def pk_sample(pool: SequencePool, P: int, K: int, T: int, rng):
    """Returns (labels B×T×H×W uint8, class indices B) with B = P·K, grouped by subject."""
    if len(pool) == 0:
        raise ValueError("the training split is empty")
    if len(pool.subject_ids) < P:
        raise ValueError(f"need {P} training subjects, the split has {len(pool.subject_ids)}")
    chosen = rng.choice(len(pool.subject_ids), size=P, replace=False)
    frames, targets = [], []
    for si in chosen:
        subject = pool.subject_ids[int(si)]
        own = pool.by_subject[subject]
        picks = rng.choice(len(own), size=K, replace=len(own) < K)
        for j in picks:
            frames.append(crop_window(pool.arrays[own[int(j)]], T, rng))
            targets.append(pool.label_of[subject])
    return np.stack(frames), np.asarray(targets, dtype=np.int64)
