"""Differentiable primitives.

Every function here takes and returns :class:`Tensor`. Binary ops broadcast
with numpy rules; their adjoints sum the gradient back to each operand shape.
"""
from __future__ import annotations

import numpy as np

from .._kernels import col2im, col2im_nhwc, im2col, im2col_nhwc
from .tensor import ShapeError, Tensor, as_tensor

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    ndiff = g.ndim - len(shape)
    if ndiff:
        g = g.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _pair(a, b):
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {a.shape} with {b.shape}") from exc
    return a, b


# -- elementwise -------------------------------------------------------------

def add(a, b):
    a, b = _pair(a, b)
    sa, sb = a.shape, b.shape
    return Tensor._make(a.data + b.data, (a, b),
                        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b):
    a, b = _pair(a, b)
    sa, sb = a.shape, b.shape
    return Tensor._make(a.data - b.data, (a, b),
                        lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b):
    a, b = _pair(a, b)
    ad, bd = a.data, b.data

    def back(g):
        return (_unbroadcast(g * bd, ad.shape) if a.requires_grad else None,
                _unbroadcast(g * ad, bd.shape) if b.requires_grad else None)

    return Tensor._make(ad * bd, (a, b), back)


def div(a, b):
    a, b = _pair(a, b)
    ad, bd = a.data, b.data

    def back(g):
        return (_unbroadcast(g / bd, ad.shape) if a.requires_grad else None,
                _unbroadcast(-g * ad / (bd * bd), bd.shape) if b.requires_grad else None)

    return Tensor._make(ad / bd, (a, b), back)


def scalar_mul(a: Tensor, s: float):
    s = a.data.dtype.type(s)
    return Tensor._make(a.data * s, (a,), lambda g: (g * s,))


def relu(a: Tensor):
    out = np.maximum(a.data, a.data.dtype.type(0))
    return Tensor._make(out, (a,), lambda g: (g * (out > 0),))


def sqrt(a: Tensor):
    out = np.sqrt(a.data)
    return Tensor._make(out, (a,), lambda g: (g / (2 * out),))


def exp(a: Tensor):
    out = np.exp(a.data)
    return Tensor._make(out, (a,), lambda g: (g * out,))


def log(a: Tensor):
    x = a.data
    return Tensor._make(np.log(x), (a,), lambda g: (g / x,))


# -- shape -------------------------------------------------------------------

def reshape(a: Tensor, shape):
    old = a.shape
    return Tensor._make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a: Tensor, axes=None):
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = tuple(np.argsort(axes))
    return Tensor._make(np.transpose(a.data, axes), (a,),
                        lambda g: (np.transpose(g, inv),))


def index(a: Tensor, idx):
    shape, dtype = a.shape, a.dtype

    def back(g):
        out = np.zeros(shape, dtype=dtype)
        np.add.at(out, idx, g)
        return (out,)

    return Tensor._make(a.data[idx], (a,), back)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(str(exc)) from exc
    cuts = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, cuts, axis=axis))

    return Tensor._make(out, tensors, back)


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    expanded = [reshape(t, t.shape[:axis % (t.ndim + 1)] + (1,) + t.shape[axis % (t.ndim + 1):])
                for t in tensors]
    return concat(expanded, axis=axis)


# -- reductions --------------------------------------------------------------

def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def sum_over(a: Tensor, axis=None, keepdims=False):
    axes = _norm_axes(axis, a.ndim)
    shape = a.shape
    kshape = tuple(1 if i in axes else n for i, n in enumerate(shape))

    def back(g):
        return (np.broadcast_to(g.reshape(kshape), shape).copy(),)

    return Tensor._make(a.data.sum(axis=axes, keepdims=keepdims), (a,), back)


def mean_over(a: Tensor, axis=None, keepdims=False):
    axes = _norm_axes(axis, a.ndim)
    shape = a.shape
    count = int(np.prod([shape[i] for i in axes])) if axes else 1
    kshape = tuple(1 if i in axes else n for i, n in enumerate(shape))
    scale = a.dtype.type(1.0 / count)

    def back(g):
        return (np.broadcast_to(g.reshape(kshape) * scale, shape).copy(),)

    return Tensor._make(a.data.mean(axis=axes, keepdims=keepdims), (a,), back)


def max_over(a: Tensor, axis: int, keepdims=False):
    """Max along one axis; the gradient goes to the first maximal entry."""
    axis = axis % a.ndim
    arg = np.expand_dims(np.argmax(a.data, axis=axis), axis)
    out = np.take_along_axis(a.data, arg, axis=axis)
    shape, dtype = a.shape, a.dtype

    def back(g):
        full = np.zeros(shape, dtype=dtype)
        np.put_along_axis(full, arg, g.reshape(arg.shape), axis=axis)
        return (full,)

    return Tensor._make(out if keepdims else np.squeeze(out, axis), (a,), back)


def l2_normalize(a: Tensor, axis=-1, eps=1e-12):
    x = a.data
    norm = np.sqrt((x * x).sum(axis=axis, keepdims=True))
    norm = np.maximum(norm, x.dtype.type(eps))
    y = x / norm

    def back(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return ((g - y * dot) / norm,)

    return Tensor._make(y, (a,), back)


# -- linear algebra ------------------------------------------------------------

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shapes {a.shape} and {b.shape} do not align")
    ad, bd = a.data, b.data

    def back(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape)
        return ga, gb

    return Tensor._make(ad @ bd, (a, b), back)


def graph_aggregate(adj, x: Tensor) -> Tensor:
    """Â X for a constant C×C matrix and X of shape ...×C×c.

    Each output row sums its C terms in ascending order of value, so
    relabelling the nodes permutes the result bit-exactly (a plain matmul
    reorders the additions). The adjoint is the usual Âᵀ G.
    """
    a = np.asarray(adj.data if isinstance(adj, Tensor) else adj)
    x = as_tensor(x)
    C = a.shape[-1]
    if a.shape != (C, C) or x.ndim < 2 or x.shape[-2] != C:
        raise ShapeError(f"graph_aggregate shapes: A {a.shape}, X {x.shape}")
    a = a.astype(x.dtype, copy=False)
    terms = a[:, :, None] * x.data[..., None, :, :]        # ...×C×C×c, term (i, j)
    out = np.sort(terms, axis=-2).sum(axis=-2)
    return Tensor._make(out, (x,), lambda g: (a.T @ g,))


def conv2d(x: Tensor, weight: Tensor, stride=1, padding=0, layout="NCHW"):
    """Cross-correlation with a C_out×C_in×k×k kernel.

    ``layout`` selects the activation layout: B×C×H×W (default) or
    B×H×W×C, which avoids transposes and is what the backbone uses.
    """
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError("conv2d expects 4-d input and weight")
    if layout == "NCHW":
        B, C, H, W = x.shape
    elif layout == "NHWC":
        B, H, W, C = x.shape
    else:
        raise ValueError(f"unknown layout {layout!r}")
    Co, Ci, kh, kw = weight.shape
    if Ci != C:
        raise ShapeError(f"conv2d channel mismatch: input has {C}, weight expects {Ci}")
    if kh != kw:
        raise ShapeError("conv2d supports square kernels only")
    if stride < 1 or H + 2 * padding < kh or W + 2 * padding < kw:
        raise ShapeError("kernel does not fit the padded input")
    k = kh
    Ho = (H + 2 * padding - k) // stride + 1
    Wo = (W + 2 * padding - k) // stride + 1
    xd = np.ascontiguousarray(x.data)
    if layout == "NCHW":
        wmat = weight.data.reshape(Co, C * k * k).T
        cols = im2col(xd, k, stride, padding)
    else:
        wmat = np.ascontiguousarray(weight.data.transpose(2, 3, 1, 0)).reshape(k * k * C, Co)
        cols = im2col_nhwc(xd, k, stride, padding)
    out = cols @ wmat
    if layout == "NCHW":
        out = np.ascontiguousarray(out.reshape(B, Ho, Wo, Co).transpose(0, 3, 1, 2))
    else:
        out = out.reshape(B, Ho, Wo, Co)
    saved = cols if weight.requires_grad else None
    del cols

    def back(g):
        if layout == "NCHW":
            g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(B * Ho * Wo, Co)
        else:
            g2 = np.ascontiguousarray(g).reshape(B * Ho * Wo, Co)
        gx = gw = None
        if weight.requires_grad:
            gm = saved.T @ g2
            if layout == "NCHW":
                gw = gm.T.reshape(weight.shape)
            else:
                gw = np.ascontiguousarray(gm.reshape(k, k, C, Co).transpose(3, 2, 0, 1))
        if x.requires_grad:
            dcols = g2 @ wmat.T
            if layout == "NCHW":
                gx = col2im(dcols, B, C, H, W, k, stride, padding)
            else:
                gx = col2im_nhwc(dcols, B, H, W, C, k, stride, padding)
        return gx, gw

    return Tensor._make(out, (x, weight), back)


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray,
               running_var: np.ndarray, training: bool, eps=BN_EPS, momentum=BN_MOMENTUM,
               axis=1):
    """Normalize over every axis except the channel ``axis``.

    In training mode the running statistics arrays are updated in place.
    """
    axis = axis % x.ndim
    C = x.shape[axis]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeError(f"batch_norm parameters must have shape ({C},)")
    if axis != x.ndim - 1:
        # move channels last, normalise, move back
        moved = transpose(x, tuple(i for i in range(x.ndim) if i != axis) + (axis,))
        out = batch_norm(moved, gamma, beta, running_mean, running_var, training, eps,
                         momentum, axis=-1)
        inv_axes = list(range(x.ndim - 1))
        inv_axes.insert(axis, x.ndim - 1)
        return transpose(out, tuple(inv_axes))

    shape = x.shape
    # view as rows × (R·C) with parameters tiled R times: elementwise loops over a
    # narrow channel axis are slow in numpy
    R = shape[-2] if x.ndim >= 3 else 1
    x2 = x.data.reshape(-1, R * C)
    n = x2.shape[0] * R
    dt = x2.dtype.type
    ones = np.ones(x2.shape[0], dtype=x2.dtype)

    def colsum(a):
        # column sums as a BLAS product: far faster than sum(axis=0) on tall arrays
        v = ones @ a
        return v.reshape(R, C).sum(axis=0) if R > 1 else v

    def tile(v):
        return np.tile(v, R) if R > 1 else v

    if training:
        if n == 0:
            raise ShapeError("batch_norm in train mode needs a non-empty batch")
        mean = colsum(x2) / dt(n)
        xc = x2 - tile(mean)
        var = colsum(xc * xc) / dt(n)
        running_mean *= (1 - momentum)
        running_mean += momentum * mean
        unbiased = var * dt(n / (n - 1)) if n > 1 else var
        running_var *= (1 - momentum)
        running_var += momentum * unbiased
    else:
        mean = running_mean.astype(x2.dtype)
        var = running_var.astype(x2.dtype)
        xc = x2 - tile(mean)
    inv = dt(1.0) / np.sqrt(var + dt(eps))
    xhat = xc * tile(inv)
    del xc
    gd = gamma.data
    out = (xhat * tile(gd) + tile(beta.data)).reshape(shape)

    def back(g):
        g2 = g.reshape(-1, R * C)
        gbeta = colsum(g2)
        ggamma = colsum(g2 * xhat)
        gx = None
        if x.requires_grad:
            if training:
                gx = (g2 * dt(n) - tile(gbeta) - xhat * tile(ggamma)) * tile(gd * inv / dt(n))
            else:
                gx = g2 * tile(gd * inv)
            gx = gx.reshape(shape)
        return gx, ggamma, gbeta

    return Tensor._make(out, (x, gamma, beta), back)


def softmax_cross_entropy(logits: Tensor, targets):
    """Mean over the batch of -log softmax(logits)[target]."""
    if logits.ndim != 2:
        raise ShapeError("logits must be B×C")
    B, C = logits.shape
    t = np.asarray(targets, dtype=np.int64).reshape(-1)
    if t.shape[0] != B:
        raise ShapeError("one target per row is required")
    if np.any(t < 0) or np.any(t >= C):
        raise ValueError(f"target out of range [0, {C})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    ez = np.exp(z)
    s = ez.sum(axis=1, keepdims=True)
    logp = z - np.log(s)
    rows = np.arange(B)
    loss = -logp[rows, t].mean()

    def back(g):
        p = ez / s
        p[rows, t] -= 1
        return (p * (g / B),)

    return Tensor._make(np.asarray(loss, dtype=logits.dtype), (logits,), back)
