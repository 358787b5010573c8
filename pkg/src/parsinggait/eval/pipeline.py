"""Embedding extraction and the query/gallery evaluation pipeline."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..autodiff.tensor import no_grad
from .metrics import EmbeddingSet, distance_matrix, metrics_report


def embed_sequence(model, labels: np.ndarray) -> np.ndarray:
    """Full-length N×H×W sequence -> P×d embedding (eval mode, no tape)."""
    with no_grad():
        return model(np.asarray(labels)[None]).data[0]


def extract_embeddings(model, manifest, subset: str = "test", entries=None) -> EmbeddingSet:
    """Embed every sequence of a manifest subset, one full sequence at a time."""
    model.eval()
    entries = manifest.subset(subset) if entries is None else entries
    feats = [embed_sequence(model, manifest.load(e).to_array()) for e in entries]
    shape = (0, model.config.num_parts, model.config.embedding_dim)
    return EmbeddingSet([e.sequence_id for e in entries], [e.subject_id for e in entries],
                        np.stack(feats) if feats else np.zeros(shape, np.float32))


def evaluate(model, manifest, metric: str = "euclidean", mode: str = "per_part", out_path=None):
    """Query/gallery retrieval on the test split; optionally writes the JSON report."""
    query = extract_embeddings(model, manifest, "query")
    gallery = extract_embeddings(model, manifest, "gallery")
    dist = distance_matrix(query, gallery, metric, mode)
    report = metrics_report(dist, query.subject_ids, gallery.subject_ids, metric)
    if out_path is not None:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report
