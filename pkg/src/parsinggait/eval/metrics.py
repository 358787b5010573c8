"""Open-set retrieval metrics over a query × gallery distance matrix."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..autodiff.tensor import ShapeError


@dataclass
class EmbeddingSet:
    sequence_ids: list
    subject_ids: list
    features: np.ndarray            # n × P × d

    def __post_init__(self):
        self.features = np.asarray(self.features)
        n = len(self.sequence_ids)
        if len(self.subject_ids) != n or self.features.shape[0] != n:
            raise ShapeError("sequence ids, subject ids and feature rows must align")
        if self.features.ndim != 3:
            raise ShapeError("features must be n × P × d")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("embeddings contain non-finite values")

    def __len__(self):
        return len(self.sequence_ids)

    def select(self, ids) -> "EmbeddingSet":
        pos = {s: i for i, s in enumerate(self.sequence_ids)}
        idx = [pos[s] for s in ids]
        return EmbeddingSet([self.sequence_ids[i] for i in idx],
                            [self.subject_ids[i] for i in idx], self.features[idx])


def distance_matrix(query, gallery, metric: str = "euclidean", mode: str = "per_part") -> np.ndarray:
    """Q×G distances, averaged over parts (``per_part``) or on flattened vectors (``concat``)."""
    q = np.asarray(query.features if isinstance(query, EmbeddingSet) else query, dtype=np.float64)
    g = np.asarray(gallery.features if isinstance(gallery, EmbeddingSet) else gallery,
                   dtype=np.float64)
    if q.ndim == 2:
        q = q[:, None, :]
    if g.ndim == 2:
        g = g[:, None, :]
    if q.shape[1:] != g.shape[1:]:
        raise ShapeError(f"query parts {q.shape[1:]} vs gallery parts {g.shape[1:]}")
    if mode == "concat":
        q = q.reshape(q.shape[0], 1, -1)
        g = g.reshape(g.shape[0], 1, -1)
    elif mode != "per_part":
        raise ValueError(f"unknown distance mode {mode!r}")
    qp = np.transpose(q, (1, 0, 2))                 # P×Q×d
    gp = np.transpose(g, (1, 0, 2))
    if metric == "euclidean":
        d2 = (qp * qp).sum(-1)[:, :, None] + (gp * gp).sum(-1)[:, None, :] \
            - 2.0 * qp @ np.transpose(gp, (0, 2, 1))
        dist = np.sqrt(np.maximum(d2, 0.0))
    elif metric == "cosine":
        qn = qp / np.maximum(np.linalg.norm(qp, axis=-1, keepdims=True), 1e-12)
        gn = gp / np.maximum(np.linalg.norm(gp, axis=-1, keepdims=True), 1e-12)
        dist = 1.0 - qn @ np.transpose(gn, (0, 2, 1))
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return dist.mean(axis=0)


def _ranked_matches(distances, query_subjects, gallery_subjects):
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[1] == 0:
        raise ValueError("the gallery is empty")
    qs = np.asarray(query_subjects)
    gs = np.asarray(gallery_subjects)
    if d.shape != (len(qs), len(gs)):
        raise ShapeError(f"distance matrix {d.shape} vs {len(qs)} queries × {len(gs)} gallery")
    order = np.argsort(d, axis=1, kind="stable")     # ties keep gallery index order
    matches = gs[order] == qs[:, None]
    keep = matches.any(axis=1)
    return matches[keep], int((~keep).sum())


def rank_k(distances, query_subjects, gallery_subjects, k: int) -> float:
    """Percentage of evaluable queries with a same-subject entry among the k nearest."""
    matches, _ = _ranked_matches(distances, query_subjects, gallery_subjects)
    if len(matches) == 0:
        return 0.0
    hits = int(matches[:, :k].any(axis=1).sum())
    return 100.0 * hits / len(matches)


def mean_average_precision(distances, query_subjects, gallery_subjects) -> float:
    matches, _ = _ranked_matches(distances, query_subjects, gallery_subjects)
    if len(matches) == 0:
        return 0.0
    hits = np.cumsum(matches, axis=1)
    ranks = np.arange(1, matches.shape[1] + 1)
    ap = (matches * hits / ranks).sum(axis=1) / matches.sum(axis=1)
    return float(100.0 * ap.mean())


@dataclass
class MetricsReport:
    rank1: float
    rank5: float
    mAP: float
    num_query: int
    num_gallery: int
    excluded_queries: int
    metric: str

    def to_dict(self):
        return asdict(self)


def metrics_report(distances, query_subjects, gallery_subjects, metric="euclidean") -> MetricsReport:
    _, excluded = _ranked_matches(distances, query_subjects, gallery_subjects)
    return MetricsReport(rank_k(distances, query_subjects, gallery_subjects, 1),
                         rank_k(distances, query_subjects, gallery_subjects, 5),
                         mean_average_precision(distances, query_subjects, gallery_subjects),
                         len(query_subjects), len(gallery_subjects), excluded, metric)
