"""Batch-all triplet loss, identity cross-entropy and their weighted sum."""
from __future__ import annotations

import numpy as np

from ..autodiff import functional as F
from ..autodiff.tensor import Tensor

DIST_EPS = 1e-9


def pairwise_distances(emb: Tensor) -> Tensor:
    """B×P×d -> P×B×B Euclidean distances per part."""
    x = F.transpose(emb, (1, 0, 2))
    sq = F.sum_over(F.mul(x, x), -1)                           # P×B
    gram = F.matmul(x, F.transpose(x, (0, 2, 1)))
    d2 = F.reshape(sq, sq.shape + (1,)) + F.reshape(sq, (sq.shape[0], 1, sq.shape[1])) \
        - F.scalar_mul(gram, 2.0)
    return F.sqrt(F.relu(d2) + DIST_EPS)


def triplet_mask(labels) -> np.ndarray:
    """B×B×B boolean mask of valid (anchor, positive, negative) triples."""
    y = np.asarray(labels)
    same = y[:, None] == y[None, :]
    pos = same & ~np.eye(len(y), dtype=bool)
    return pos[:, :, None] & ~same[:, None, :]


def triplet_loss(emb: Tensor, labels, margin: float = 0.2) -> Tensor:
    """Per part: mean of the nonzero hinge terms over all valid triples; then mean over parts."""
    y = np.asarray(labels)
    if len(np.unique(y)) < 2:
        raise ValueError("triplet loss needs at least two identities in the batch")
    mask = triplet_mask(y)
    if not mask.any():
        raise ValueError("triplet loss needs an identity with two samples")
    dist = pairwise_distances(emb)                              # P×B×B
    P, B, _ = dist.shape
    diff = F.reshape(dist, (P, B, B, 1)) - F.reshape(dist, (P, B, 1, B))
    hinge = F.mul(F.relu(diff + margin), mask.astype(emb.dtype))
    per_part = F.sum_over(hinge, (1, 2, 3))
    count = np.maximum((hinge.data > 0).sum(axis=(1, 2, 3)), 1).astype(emb.dtype)
    return F.mean_over(F.div(per_part, count))


def id_loss(emb: Tensor, labels, model) -> Tensor:
    """BN-neck + per-part classifier; cross-entropy averaged over parts and batch."""
    logits = model.logits(emb)                                 # P×B×num_ids
    P, B, C = logits.shape
    y = np.asarray(labels, dtype=np.int64)
    if np.any(y < 0) or np.any(y >= C):
        raise ValueError(f"identity label outside [0, {C})")
    return F.softmax_cross_entropy(F.reshape(logits, (P * B, C)), np.tile(y, P))


def combined_loss(emb: Tensor, labels, model, alpha=1.0, beta=1.0, margin=0.2):
    """alpha·L_tri + beta·L_ce; a zero weight skips its term entirely."""
    terms = []
    if alpha:
        terms.append(F.scalar_mul(triplet_loss(emb, labels, margin), alpha))
    if beta:
        terms.append(F.scalar_mul(id_loss(emb, labels, model), beta))
    if not terms:
        raise ValueError("alpha and beta are both zero")
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total
