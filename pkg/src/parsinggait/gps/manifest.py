"""Dataset manifest (JSON lines) and split file (JSON)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .codec import CodecError, read_gps
from .types import GaitParsingSequence


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    sequence_id: str
    subject_id: str
    camera_id: str
    path: str
    num_frames: int


@dataclass
class Split:
    train_subjects: list[str] = field(default_factory=list)
    test_subjects: list[str] = field(default_factory=list)
    query_sequences: list[str] = field(default_factory=list)


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    split: Split = field(default_factory=Split)
    root: Path = Path(".")

    def __post_init__(self):
        ids = [e.sequence_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ManifestError("sequence ids must be unique")
        self._by_id = {e.sequence_id: e for e in self.entries}
        test = set(self.split.test_subjects)
        for q in self.split.query_sequences:
            if q not in self._by_id:
                raise ManifestError(f"query sequence {q!r} is not in the manifest")
            if self._by_id[q].subject_id not in test:
                raise ManifestError(f"query sequence {q!r} does not belong to a test subject")

    def __len__(self):
        return len(self.entries)

    def entry(self, sequence_id: str) -> ManifestEntry:
        return self._by_id[sequence_id]

    def load(self, entry: ManifestEntry | str) -> GaitParsingSequence:
        if isinstance(entry, str):
            entry = self._by_id[entry]
        path = self.root / entry.path
        try:
            return read_gps(path, subject_id=entry.subject_id, sequence_id=entry.sequence_id,
                            camera_id=entry.camera_id)
        except (OSError, CodecError) as exc:
            raise ManifestError(f"cannot read sequence {entry.sequence_id!r} ({path}): {exc}") \
                from exc

    def subset(self, which: str) -> list[ManifestEntry]:
        """``train``, ``test``, ``query`` or ``gallery`` entries in manifest order."""
        train = set(self.split.train_subjects)
        test = set(self.split.test_subjects)
        query = set(self.split.query_sequences)
        pick = {
            "all": lambda e: True,
            "train": lambda e: e.subject_id in train,
            "test": lambda e: e.subject_id in test,
            "query": lambda e: e.sequence_id in query,
            "gallery": lambda e: e.subject_id in test and e.sequence_id not in query,
        }
        if which not in pick:
            raise ValueError(f"unknown subset {which!r}")
        return [e for e in self.entries if pick[which](e)]

    # -- files --------------------------------------------------------------
    def save(self, manifest_path, split_path=None):
        manifest_path = Path(manifest_path)
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        with open(manifest_path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(json.dumps(asdict(e), sort_keys=True) + "\n")
        if split_path is not None:
            with open(split_path, "w", encoding="utf-8") as fh:
                json.dump(asdict(self.split), fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def from_files(cls, manifest_path, split_path=None) -> "DatasetManifest":
        manifest_path = Path(manifest_path)
        if split_path is None:
            guess = manifest_path.with_name("split.json")
            split_path = guess if guess.exists() else None
        entries = []
        with open(manifest_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    entries.append(ManifestEntry(str(d["sequence_id"]), str(d["subject_id"]),
                                                 str(d["camera_id"]), str(d["path"]),
                                                 int(d["num_frames"])))
                except (KeyError, ValueError, TypeError) as exc:
                    raise ManifestError(f"{manifest_path}:{lineno}: bad entry ({exc})") from exc
        split = Split()
        if split_path is not None:
            with open(split_path, encoding="utf-8") as fh:
                d = json.load(fh)
            split = Split([str(s) for s in d.get("train_subjects", [])],
                          [str(s) for s in d.get("test_subjects", [])],
                          [str(s) for s in d.get("query_sequences", [])])
        return cls(entries, split, manifest_path.parent)
