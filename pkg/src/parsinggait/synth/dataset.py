"""Synthetic GPS datasets: identities, viewpoints, occlusion, split files."""
from __future__ import annotations

import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..gps.codec import encode_gps
from ..gps.manifest import DatasetManifest, ManifestEntry, Split
from .walker import Occlusion, Viewpoint, generate_identity, render_walk_sequence


@dataclass
class SynthConfig:
    num_subjects: int = 32
    sequences_per_subject: int = 4
    frames_per_sequence: int = 30
    frame_size: tuple = (64, 44)
    scale_range: tuple = (0.9, 1.1)
    shear_range: tuple = (-0.06, 0.06)
    offset_range: tuple = (-1.5, 1.5)
    mirror_prob: float = 0.5
    num_cameras: int = 4
    occlusion_prob: float = 0.0
    occlusion_size: tuple = (0.15, 0.35)    # rectangle side as a fraction of frame size
    bottom_crop_prob: float = 0.0
    bottom_crop_frac: tuple = (0.1, 0.25)
    frame_drop_prob: float = 0.0
    dress_prob: float = 0.1
    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        self.frame_size = tuple(int(v) for v in self.frame_size)
        for name in ("scale_range", "shear_range", "offset_range", "occlusion_size",
                     "bottom_crop_frac"):
            setattr(self, name, tuple(float(v) for v in getattr(self, name)))
        for name in ("num_subjects", "sequences_per_subject", "frames_per_sequence",
                     "num_cameras"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("mirror_prob", "occlusion_prob", "bottom_crop_prob", "frame_drop_prob",
                     "dress_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.num_subjects < 2:
            raise ValueError("need at least one train and one test subject")
        h, w = self.frame_size
        if h < 32 or w < 22:
            raise ValueError(f"frame size {self.frame_size} below the 32x22 minimum")

    def to_dict(self):
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**d)


def subject_name(i: int) -> str:
    return f"s{i:04d}"


def sequence_name(subject: int, seq: int) -> str:
    return f"s{subject:04d}_q{seq:02d}"


def _sequence_rng(seed: int, sequence_id: str) -> np.random.Generator:
    # keyed by the id string so results never depend on generation order
    key = zlib.crc32(sequence_id.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5E, key)))


def camera_table(config: SynthConfig) -> list[Viewpoint]:
    """One fixed affine view per camera, drawn from the configured ranges."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0xCA,)))
    views = []
    for _ in range(config.num_cameras):
        views.append(Viewpoint(scale_x=float(rng.uniform(*config.scale_range)),
                               shear=float(rng.uniform(*config.shear_range)),
                               mirror=bool(rng.uniform() < config.mirror_prob),
                               offset_x=float(rng.uniform(*config.offset_range))))
    return views


def _occlusion(config: SynthConfig, rng) -> Occlusion:
    h, w = config.frame_size
    rects = []
    if rng.uniform() < config.occlusion_prob:
        rh = max(1, int(round(h * rng.uniform(*config.occlusion_size))))
        rw = max(1, int(round(w * rng.uniform(*config.occlusion_size))))
        y0 = int(rng.integers(0, h - rh + 1))
        x0 = int(rng.integers(0, w - rw + 1))
        rects.append((y0, x0, y0 + rh, x0 + rw))
    bottom = 0
    if rng.uniform() < config.bottom_crop_prob:
        bottom = int(round(h * rng.uniform(*config.bottom_crop_frac)))
    dropped = ()
    if config.frame_drop_prob > 0:
        keep = rng.uniform(size=config.frames_per_sequence) >= config.frame_drop_prob
        dropped = tuple(int(t) for t in np.flatnonzero(~keep))
    return Occlusion(tuple(rects), bottom, dropped)


def generate_sequence(config: SynthConfig, subject: int, seq: int, cameras=None):
    """Render one sequence; depends only on (config, subject, seq)."""
    cameras = cameras if cameras is not None else camera_table(config)
    sid = sequence_name(subject, seq)
    rng = _sequence_rng(config.seed, sid)
    cam = int(rng.integers(0, config.num_cameras))
    profile = generate_identity(config.seed, subject, dress_prob=config.dress_prob)
    occ = _occlusion(config, rng)
    return render_walk_sequence(profile, cameras[cam], config.frames_per_sequence, occ, rng,
                                size=config.frame_size, subject_id=subject_name(subject),
                                sequence_id=sid, camera_id=f"c{cam:02d}")


def make_split(config: SynthConfig, entries: list[ManifestEntry]) -> Split:
    """Disjoint train/test subjects; one random query per test subject."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0x5B,)))
    subjects = [subject_name(i) for i in range(config.num_subjects)]
    order = rng.permutation(config.num_subjects)
    n_train = min(config.num_subjects - 1, max(1, int(round(config.train_fraction * config.num_subjects))))
    train = sorted(subjects[i] for i in order[:n_train])
    test = sorted(subjects[i] for i in order[n_train:])
    queries = []
    for s in test:
        own = [e.sequence_id for e in entries if e.subject_id == s]
        if len(own) >= 2:       # keep at least one gallery sequence per query subject
            queries.append(own[int(rng.integers(0, len(own)))])
    return Split(train, test, sorted(queries))


def generate_dataset(config: SynthConfig, out_dir, threads: int = 1) -> DatasetManifest:
    """Write ``seqs/*.gpsq``, ``manifest.jsonl``, ``split.json`` and ``synth_config.json``."""
    out = Path(out_dir)
    seq_dir = out / "seqs"
    try:
        seq_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {seq_dir}: {exc}") from exc
    cameras = camera_table(config)
    jobs = [(s, q) for s in range(config.num_subjects) for q in range(config.sequences_per_subject)]

    def work(job):
        s, q = job
        seq = generate_sequence(config, s, q, cameras)
        rel = f"seqs/{seq.sequence_id}.gpsq"
        path = out / rel
        try:
            path.write_bytes(encode_gps(seq))
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        return ManifestEntry(seq.sequence_id, seq.subject_id, seq.camera_id, rel, len(seq.frames))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            entries = list(pool.map(work, jobs))
    else:
        entries = [work(j) for j in jobs]
    manifest = DatasetManifest(entries, make_split(config, entries), out)
    manifest.save(out / "manifest.jsonl", out / "split.json")
    with open(out / "synth_config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
