"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from parsinggait._kernels import _fallback

try:
    from parsinggait._kernels import _ext
except ImportError:
    _ext = None


def cases(rng):
    # shapes of the first backbone stage on a 64×44 batch of 8 sequences × 10 frames
    x = rng.standard_normal((80, 64, 44, 12)).astype(np.float32)
    cols = rng.standard_normal((80 * 64 * 44, 9 * 12)).astype(np.float32)
    flat = np.repeat(rng.integers(0, 12, 20_000), rng.integers(1, 30, 20_000)).astype(np.uint8)
    values, lengths = _fallback.rle_encode(flat)
    return {
        "im2col_nhwc": lambda m: m.im2col_nhwc(x, 3, 1, 1),
        "col2im_nhwc": lambda m: m.col2im_nhwc(cols, 80, 64, 44, 12, 3, 1, 1),
        "rle_encode": lambda m: m.rle_encode(flat),
        "rle_decode": lambda m: m.rle_decode(values, lengths, flat.size),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ext is None:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        slow = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat)) * 1e3
        fast = min(timeit.repeat(lambda: fn(_ext), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<14}{slow:>12.2f}{fast:>12.2f}{slow / fast:>9.2f}x")


if __name__ == "__main__":
    main()
