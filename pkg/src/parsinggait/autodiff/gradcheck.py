"""Central-difference gradient verification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckResult:
    passed: bool
    max_rel_error: float
    num_checked: int

    def __bool__(self):
        return self.passed


def grad_check(fn, x: Tensor, eps: float = 1e-5, tol: float = 1e-4,
               max_points: int | None = None, rng=None) -> GradCheckResult:
    """Compare the analytic gradient of scalar ``fn(x)`` with central differences.

    ``x`` is evaluated in float64. The relative error per coordinate is
    ``|a - n| / max(1, |a| + |n|)``. ``max_points`` limits the number of
    probed coordinates (chosen with ``rng``) for large inputs.
    """
    base = np.array(x.data, dtype=np.float64)
    probe = Tensor(base.copy(), requires_grad=True, dtype=np.float64)
    out = fn(probe)
    out.backward()
    analytic = probe.grad.copy()

    flat = base.reshape(-1)
    idx = np.arange(flat.size)
    if max_points is not None and flat.size > max_points:
        rng = rng if rng is not None else np.random.default_rng(0)
        idx = np.sort(rng.choice(flat.size, size=max_points, replace=False))

    worst = 0.0
    for i in idx:
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(fn(Tensor(base, dtype=np.float64)).data)
        flat[i] = orig - eps
        fm = float(fn(Tensor(base, dtype=np.float64)).data)
        flat[i] = orig
        num = (fp - fm) / (2 * eps)
        a = float(analytic.reshape(-1)[i])
        rel = abs(a - num) / max(1.0, abs(a) + abs(num))
        worst = max(worst, rel)
    return GradCheckResult(worst < tol, worst, int(idx.size))
