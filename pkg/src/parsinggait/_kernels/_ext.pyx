# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: patch extraction for convolution and run-length coding."""
import numpy as np
cimport numpy as cnp

ctypedef fused real:
    float
    double


def im2col(real[:, :, :, ::1] x, int k, int stride, int pad):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    dtype = np.float32 if real is float else np.float64
    out_arr = np.zeros((B * Ho * Wo, C * k * k), dtype=dtype)
    cdef real[:, ::1] out = out_arr
    cdef Py_ssize_t b, c, i, j, oi, oj, row, col, yi, xj
    with nogil:
        for b in range(B):
            for oi in range(Ho):
                for oj in range(Wo):
                    row = (b * Ho + oi) * Wo + oj
                    col = 0
                    for c in range(C):
                        for i in range(k):
                            yi = oi * stride + i - pad
                            for j in range(k):
                                xj = oj * stride + j - pad
                                if 0 <= yi < H and 0 <= xj < W:
                                    out[row, col] = x[b, c, yi, xj]
                                col += 1
    return out_arr


def col2im(real[:, ::1] cols, Py_ssize_t B, Py_ssize_t C, Py_ssize_t H, Py_ssize_t W,
           int k, int stride, int pad):
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    dtype = np.float32 if real is float else np.float64
    out_arr = np.zeros((B, C, H, W), dtype=dtype)
    cdef real[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, c, i, j, oi, oj, row, col, yi, xj
    with nogil:
        for b in range(B):
            for oi in range(Ho):
                for oj in range(Wo):
                    row = (b * Ho + oi) * Wo + oj
                    col = 0
                    for c in range(C):
                        for i in range(k):
                            yi = oi * stride + i - pad
                            for j in range(k):
                                xj = oj * stride + j - pad
                                if 0 <= yi < H and 0 <= xj < W:
                                    out[b, c, yi, xj] += cols[row, col]
                                col += 1
    return out_arr


def rle_encode(const cnp.uint8_t[::1] flat):
    cdef Py_ssize_t n = flat.shape[0], i, r = 0
    values_arr = np.empty(n, dtype=np.uint8)
    lengths_arr = np.empty(n, dtype=np.uint32)
    cdef cnp.uint8_t[::1] values = values_arr
    cdef cnp.uint32_t[::1] lengths = lengths_arr
    if n == 0:
        return values_arr[:0], lengths_arr[:0]
    values[0] = flat[0]
    lengths[0] = 1
    for i in range(1, n):
        if flat[i] == values[r]:
            lengths[r] += 1
        else:
            r += 1
            values[r] = flat[i]
            lengths[r] = 1
    return values_arr[:r + 1].copy(), lengths_arr[:r + 1].copy()


def rle_decode(const cnp.uint8_t[::1] values, const cnp.uint32_t[::1] lengths, Py_ssize_t total):
    cdef Py_ssize_t r, j, pos = 0, acc = 0
    for r in range(lengths.shape[0]):
        acc += lengths[r]
    if acc != total:
        raise ValueError(f"run lengths sum to {acc}, expected {total}")
    out_arr = np.empty(total, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    for r in range(values.shape[0]):
        for j in range(lengths[r]):
            out[pos] = values[r]
            pos += 1
    return out_arr


def im2col_nhwc(real[:, :, :, ::1] x, int k, int stride, int pad):
    """B×H×W×C input -> (B·Ho·Wo)×(k·k·C) patches, column order (i, j, c)."""
    cdef Py_ssize_t B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3]
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    dtype = np.float32 if real is float else np.float64
    out_arr = np.zeros((B * Ho * Wo, k * k * C), dtype=dtype)
    cdef real[:, ::1] out = out_arr
    cdef Py_ssize_t b, c, i, j, oi, oj, row, base, yi, xj
    with nogil:
        for b in range(B):
            for oi in range(Ho):
                for oj in range(Wo):
                    row = (b * Ho + oi) * Wo + oj
                    for i in range(k):
                        yi = oi * stride + i - pad
                        if yi < 0 or yi >= H:
                            continue
                        for j in range(k):
                            xj = oj * stride + j - pad
                            if xj < 0 or xj >= W:
                                continue
                            base = (i * k + j) * C
                            for c in range(C):
                                out[row, base + c] = x[b, yi, xj, c]
    return out_arr


def col2im_nhwc(real[:, ::1] cols, Py_ssize_t B, Py_ssize_t H, Py_ssize_t W, Py_ssize_t C,
                int k, int stride, int pad):
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    dtype = np.float32 if real is float else np.float64
    out_arr = np.zeros((B, H, W, C), dtype=dtype)
    cdef real[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, c, i, j, oi, oj, row, base, yi, xj
    with nogil:
        for b in range(B):
            for oi in range(Ho):
                for oj in range(Wo):
                    row = (b * Ho + oi) * Wo + oj
                    for i in range(k):
                        yi = oi * stride + i - pad
                        if yi < 0 or yi >= H:
                            continue
                        for j in range(k):
                            xj = oj * stride + j - pad
                            if xj < 0 or xj >= W:
                                continue
                            base = (i * k + j) * C
                            for c in range(C):
                                out[b, yi, xj, c] += cols[row, base + c]
    return out_arr
