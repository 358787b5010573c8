"""Hot kernels with a compiled backend and a numpy fallback.

The compiled module is used when it was built (``pip install -e .`` runs
Cython); set ``PARSINGGAIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("PARSINGGAIT_PURE_PYTHON"):
    try:
        from . import _ext as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

im2col = _impl.im2col
col2im = _impl.col2im
im2col_nhwc = _impl.im2col_nhwc
col2im_nhwc = _impl.col2im_nhwc
rle_encode = _impl.rle_encode
rle_decode = _impl.rle_decode

__all__ = ["BACKEND", "im2col", "col2im", "im2col_nhwc", "col2im_nhwc", "rle_encode", "rle_decode"]
