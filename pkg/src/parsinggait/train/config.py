from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path


@dataclass
class TrainConfig:
    batch_ids: int = 32             # P_b
    samples_per_id: int = 2         # K_b
    frames_per_sample: int = 30     # T_b
    epochs: int = 400
    base_lr: float = 0.1
    milestones: tuple = (0.3375, 0.675, 0.8375)   # fractions of ``epochs``
    momentum: float = 0.9
    weight_decay: float = 5e-4
    triplet_margin: float = 0.2
    alpha: float = 1.0              # triplet weight
    beta: float = 1.0               # cross-entropy weight
    iterations_per_epoch: int = 0   # 0: ceil(train sequences / (P_b * K_b))
    checkpoint_every: int = 0       # epochs between checkpoints; 0 keeps only the final one
    seed: int = 0

    def __post_init__(self):
        self.milestones = tuple(float(m) for m in self.milestones)
        if self.batch_ids < 2 or self.samples_per_id < 2:
            raise ValueError("triplet mining needs batch_ids >= 2 and samples_per_id >= 2")
        if self.frames_per_sample < 1 or self.epochs < 1:
            raise ValueError("frames_per_sample and epochs must be positive")
        ms = self.milestones
        if any(not 0.0 < m < 1.0 for m in ms) or any(a >= b for a, b in zip(ms, ms[1:])):
            raise ValueError(f"milestones {ms} must be strictly increasing inside (0, 1)")
        if self.base_lr <= 0 or self.momentum < 0 or self.weight_decay < 0:
            raise ValueError("base_lr must be positive; momentum and weight_decay non-negative")

    def to_dict(self):
        d = asdict(self)
        d["milestones"] = list(self.milestones)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(Path(path), encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Step schedule: base_lr × 0.1 per milestone passed (milestone epoch = round(frac·epochs))."""
    passed = sum(1 for m in config.milestones if epoch >= round(m * config.epochs))
    return config.base_lr * 0.1 ** passed
