"""Pure numpy versions of the compiled kernels in ``_ext.pyx``.

Both backends must agree bit-for-bit; ``tests/test_kernels.py`` checks this.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col(x, k, stride, pad):
    B, C, H, W = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    # win: B, C, Ho, Wo, k, k -> B, Ho, Wo, C, k, k
    Ho, Wo = win.shape[2], win.shape[3]
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(B * Ho * Wo, C * k * k)


def col2im(cols, B, C, H, W, k, stride, pad):
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    c6 = cols.reshape(B, Ho, Wo, C, k, k)
    out = np.zeros((B, C, H + 2 * pad, W + 2 * pad), dtype=cols.dtype)
    # reversed offsets reproduce the compiled loop's per-pixel summation order
    for i in reversed(range(k)):
        for j in reversed(range(k)):
            out[:, :, i:i + stride * Ho:stride, j:j + stride * Wo:stride] += \
                c6[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return np.ascontiguousarray(out[:, :, pad:pad + H, pad:pad + W])


def rle_encode(flat):
    flat = np.asarray(flat, dtype=np.uint8)
    if flat.size == 0:
        return flat[:0].copy(), np.zeros(0, dtype=np.uint32)
    starts = np.flatnonzero(np.r_[True, flat[1:] != flat[:-1]])
    lengths = np.diff(np.r_[starts, flat.size]).astype(np.uint32)
    return flat[starts].copy(), lengths


def rle_decode(values, lengths, total):
    acc = int(np.sum(lengths, dtype=np.int64))
    if acc != total:
        raise ValueError(f"run lengths sum to {acc}, expected {total}")
    return np.repeat(np.asarray(values, dtype=np.uint8), np.asarray(lengths, dtype=np.int64))


def im2col_nhwc(x, k, stride, pad):
    B, H, W, C = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    # win: B, Ho, Wo, C, k, k -> B, Ho, Wo, k, k, C
    Ho, Wo = win.shape[1], win.shape[2]
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(B * Ho * Wo, k * k * C)


def col2im_nhwc(cols, B, H, W, C, k, stride, pad):
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    c6 = cols.reshape(B, Ho, Wo, k, k, C)
    out = np.zeros((B, H + 2 * pad, W + 2 * pad, C), dtype=cols.dtype)
    for i in reversed(range(k)):
        for j in reversed(range(k)):
            out[:, i:i + stride * Ho:stride, j:j + stride * Wo:stride, :] += c6[:, :, :, i, j, :]
    return np.ascontiguousarray(out[:, pad:pad + H, pad:pad + W, :])
