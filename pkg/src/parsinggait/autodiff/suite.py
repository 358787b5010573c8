"""Finite-difference sweep over every differentiable primitive and the loss chain."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import functional as F
from .gradcheck import GradCheckResult, grad_check
from .tensor import Tensor


@dataclass
class SuiteEntry:
    name: str
    shape: tuple
    result: GradCheckResult


def _t(rng, shape, lo=-1.0, hi=1.0):
    return Tensor(rng.uniform(lo, hi, shape), dtype=np.float64)


def _away_from_zero(rng, shape, gap=0.05):
    x = rng.uniform(-1, 1, shape)
    return Tensor(np.where(np.abs(x) < gap, np.sign(x + 1e-12) * gap, x) * 2, dtype=np.float64)


def _distinct(rng, shape):
    # well-separated values keep max/argmax away from ties under the probe step
    n = int(np.prod(shape))
    return Tensor((rng.permutation(n) * 0.1 + rng.uniform(0, 0.01, n)).reshape(shape),
                  dtype=np.float64)


class _Head:
    """Stand-in exposing ``logits`` for the cross-entropy term (BN-neck + per-part classifier)."""

    def __init__(self, gamma, beta, classifier):
        self.gamma, self.beta, self.classifier = gamma, beta, classifier
        n = gamma.shape[0]
        self.rm, self.rv = np.zeros(n), np.ones(n)

    def logits(self, emb):
        B, P, d = emb.shape
        z = F.batch_norm(F.reshape(emb, (B, P * d)), self.gamma, self.beta, self.rm, self.rv, True)
        return F.matmul(F.transpose(F.reshape(z, (B, P, d)), (1, 0, 2)), self.classifier)


def _cases(rng):
    from ..model.network import gcn_layer, regional_features, regional_pooling
    from ..partgraph import coarse_graph, fine_graph, get_graph
    from ..train.losses import combined_loss, id_loss, triplet_loss

    shapes3 = [(3, 4), (2, 3, 5), (6,)]
    for s in shapes3:
        w = rng.uniform(-1, 1, s)
        c = rng.uniform(-1, 1, s)
        yield "add", s, (lambda x, c=c, w=w: F.sum_over(F.mul(F.add(x, Tensor(c)), Tensor(w)))), _t(rng, s)
        yield "mul", s, (lambda x, c=c: F.sum_over(F.mul(F.mul(x, Tensor(c)), x))), _t(rng, s)
        yield "scalar_mul", s, (lambda x, w=w: F.sum_over(F.mul(F.scalar_mul(x, -2.5), Tensor(w)))), _t(rng, s)
        yield "relu", s, (lambda x, w=w: F.sum_over(F.mul(F.relu(x), Tensor(w)))), _away_from_zero(rng, s)
        yield "mean_over", s, (lambda x, w=w: F.sum_over(F.mul(F.mean_over(x, 0, keepdims=True), Tensor(w)))), _t(rng, s)
        yield "max_over", s, (lambda x, w=w: F.sum_over(F.mul(F.max_over(x, -1, keepdims=True), Tensor(w)))), _distinct(rng, s)
        yield "l2_normalize", s, (lambda x, w=w: F.sum_over(F.mul(F.l2_normalize(x, -1), Tensor(w)))), _t(rng, s)
        yield "sub", s, (lambda x, c=c, w=w: F.sum_over(F.mul(F.sub(Tensor(c), x), Tensor(w)))), _t(rng, s)
        yield "div", s, (lambda x, c=c: F.sum_over(F.div(Tensor(c), x))), _t(rng, s, 0.5, 2.0)
        yield "sqrt", s, (lambda x, w=w: F.sum_over(F.mul(F.sqrt(x), Tensor(w)))), _t(rng, s, 0.2, 2.0)
        yield "exp", s, (lambda x, w=w: F.sum_over(F.mul(F.exp(x), Tensor(w)))), _t(rng, s)
        yield "log", s, (lambda x, w=w: F.sum_over(F.mul(F.log(x), Tensor(w)))), _t(rng, s, 0.2, 2.0)
        yield "index", s, (lambda x, w=w: F.sum_over(F.mul(F.index(x, (slice(None, None, -1),)), Tensor(w)))), _t(rng, s)
        yield "stack", s, (lambda x, w=w: F.sum_over(F.mul(F.stack([x, F.mul(x, x)], 0),
                                                          Tensor(np.stack([w, w], 0))))), _t(rng, s)
        yield "transpose", s, (lambda x, w=w: F.sum_over(F.mul(F.transpose(x), Tensor(w.T)))), _t(rng, s)
        yield "concat", s, (lambda x, w=w: F.sum_over(F.mul(F.concat([x, F.scalar_mul(x, 3.0)], 0),
                                                           Tensor(np.concatenate([w, -w], 0))))), _t(rng, s)
    for m, k, n in [(3, 4, 2), (1, 5, 3), (4, 2, 4)]:
        b = rng.uniform(-1, 1, (k, n))
        w = rng.uniform(-1, 1, (m, n))
        yield "matmul", (m, k), (lambda x, b=b, w=w: F.sum_over(F.mul(F.matmul(x, Tensor(b)), Tensor(w)))), _t(rng, (m, k))
    for name, lead in [("fine", ()), ("coarse", (2,)), ("fine", (2, 3))]:
        a = get_graph(name).normalized
        shape = lead + (a.shape[0], 3)
        w = rng.uniform(-1, 1, shape)
        yield "graph_aggregate", shape, (lambda x, a=a, w=w: F.sum_over(F.mul(F.graph_aggregate(a, x), Tensor(w)))), _t(rng, shape)
    for (B, C, H, W, Co, k, s, p) in [(1, 2, 4, 4, 3, 3, 1, 1), (2, 1, 5, 4, 2, 3, 2, 1), (1, 3, 3, 3, 2, 1, 1, 0)]:
        wt = rng.uniform(-1, 1, (Co, C, k, k))
        x0 = rng.uniform(-1, 1, (B, C, H, W))
        yield "conv2d.input", (B, C, H, W), (lambda x, wt=wt, s=s, p=p: F.mean_over(F.relu(F.conv2d(x, Tensor(wt), s, p)))), Tensor(x0)
        yield "conv2d.weight", wt.shape, (lambda w_, x0=x0, s=s, p=p: F.mean_over(F.relu(F.conv2d(Tensor(x0), w_, s, p)))), Tensor(wt)
        xn = np.ascontiguousarray(np.moveaxis(x0, 1, -1))
        yield "conv2d.nhwc", xn.shape, (lambda x, wt=wt, s=s, p=p: F.mean_over(F.relu(F.conv2d(x, Tensor(wt), s, p, "NHWC")))), Tensor(xn)
    for shape, axis in [((4, 3), 1), ((2, 3, 2, 2), 1), ((3, 2, 2, 4), -1)]:
        c = shape[axis]
        gm, bt = rng.uniform(0.5, 1.5, c), rng.uniform(-1, 1, c)
        w = rng.uniform(-1, 1, shape)

        def bn(x, gm=gm, bt=bt, w=w, axis=axis, c=c):
            y = F.batch_norm(x, Tensor(gm), Tensor(bt), np.zeros(c), np.ones(c), True, axis=axis)
            return F.sum_over(F.mul(y, Tensor(w)))
        yield "batch_norm", shape, bn, _t(rng, shape)
    for B, C in [(4, 5), (3, 2), (6, 7)]:
        t = rng.integers(0, C, B)
        yield "softmax_cross_entropy", (B, C), (lambda x, t=t: F.softmax_cross_entropy(x, t)), _t(rng, (B, C), -2, 2)

    # model-level chain: blend -> regional pooling -> two GCN layers -> per-part FC -> losses
    sizes = [(4, 3, 2, 3, 2), (6, 2, 2, 4, 3), (4, 4, 1, 2, 2)]     # B, h, w, c, d
    for graph, (B, h, w, c, d) in itertools.product((coarse_graph(), fine_graph()), sizes):
        C = graph.num_nodes
        labels = np.repeat(np.arange(B // 2), 2)
        fmap = rng.uniform(0.1, 1.0, (B, h, w, c))
        masks = (rng.uniform(size=(B, C, h, w)) < 0.5).astype(np.float64)
        adj = Tensor(graph.normalized)
        W1, W2 = rng.uniform(-1, 1, (c, c)), rng.uniform(-1, 1, (c, c))
        fc = rng.uniform(-1, 1, (C, c, d))
        gam = rng.uniform(0.2, 0.9, C)
        head = _Head(Tensor(np.ones(C * d)), Tensor(np.zeros(C * d)), Tensor(rng.uniform(-1, 1, (C, d, B // 2))))

        def chain(fm, gm, w1, loss, fc=fc, masks=masks, W2=W2, adj=adj, head=head, labels=labels):
            x = regional_pooling(regional_features(fm, masks, gm))
            x = gcn_layer(gcn_layer(x, adj, w1), adj, Tensor(W2))
            emb = F.transpose(F.matmul(F.transpose(x, (1, 0, 2)), Tensor(fc)), (1, 0, 2))
            if loss == "triplet":
                return triplet_loss(emb, labels, margin=5.0)
            if loss == "ce":
                return id_loss(emb, labels, head)
            return combined_loss(emb, labels, head, 1.0, 1.0, 5.0)

        for loss in ("triplet", "ce", "combined"):
            yield f"chain[{graph.name}].{loss}.features", fmap.shape, \
                (lambda t, loss=loss, gam=gam, W1=W1, chain=chain: chain(t, Tensor(gam), Tensor(W1), loss)), Tensor(fmap)
            yield f"chain[{graph.name}].{loss}.gamma", gam.shape, \
                (lambda t, loss=loss, fmap=fmap, W1=W1, chain=chain: chain(Tensor(fmap), t, Tensor(W1), loss)), Tensor(gam)
            yield f"chain[{graph.name}].{loss}.gcn_weight", W1.shape, \
                (lambda t, loss=loss, fmap=fmap, gam=gam, chain=chain: chain(Tensor(fmap), Tensor(gam), t, loss)), Tensor(W1)


def run_suite(seed: int = 0, eps: float = 1e-5, tol: float = 1e-4, max_points: int = 40):
    """Grad-check every primitive on three shapes plus the loss chain, all in float64."""
    rng = np.random.default_rng(seed)
    out = []
    for name, shape, fn, x in _cases(rng):
        res = grad_check(fn, x, eps=eps, tol=tol, max_points=max_points, rng=rng)
        out.append(SuiteEntry(name, tuple(shape), res))
    return out
