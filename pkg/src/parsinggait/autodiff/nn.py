"""Module containers: named parameters, buffers and train/eval mode."""
from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Parameter, Tensor


class Module:
    def __init__(self):
        self._params: dict[str, Parameter] = {}
        self._buffers: dict[str, np.ndarray] = {}
        self._children: dict[str, Module] = {}
        self.training = True

    def __setattr__(self, key, value):
        if isinstance(value, Parameter):
            self.__dict__.setdefault("_params", {})[key] = value
        elif isinstance(value, Module):
            self.__dict__.setdefault("_children", {})[key] = value
        object.__setattr__(self, key, value)

    def register_buffer(self, name, value: np.ndarray):
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield prefix + name, p
        for cname, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{cname}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix=""):
        for name in self._buffers:
            yield prefix + name, getattr(self, name)
        for cname, child in self._children.items():
            yield from child.named_buffers(f"{prefix}{cname}.")

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.data for name, p in self.named_parameters()}
        state.update(dict(self.named_buffers()))
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]):
        own = self.state_dict()
        missing = set(own) - set(state)
        if missing:
            raise KeyError(f"missing entries in state: {sorted(missing)}")
        for name, p in self.named_parameters():
            if state[name].shape != p.data.shape:
                raise ValueError(f"shape mismatch for {name}")
            p.data = np.array(state[name], dtype=p.data.dtype)
            p.zero_grad()
        for name, buf in self.named_buffers():
            buf[...] = state[name]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode=True):
        self.training = mode
        for child in self._children.values():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def astype(self, dtype):
        """Cast parameters and buffers in place (float64 for gradient checks)."""
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
            p.zero_grad()
        self._cast_buffers(dtype)
        return self

    def _cast_buffers(self, dtype):
        for name in list(self._buffers):
            arr = getattr(self, name).astype(dtype)
            self._buffers[name] = arr
            object.__setattr__(self, name, arr)
        for child in self._children.values():
            child._cast_buffers(dtype)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def kaiming_normal(rng, shape, fan_in):
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


class Conv2d(Module):
    def __init__(self, c_in, c_out, k, stride=1, padding=0, rng=None, layout="NCHW"):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.stride, self.padding, self.layout = stride, padding, layout
        self.weight = Parameter(kaiming_normal(rng, (c_out, c_in, k, k), c_in * k * k))

    def forward(self, x):
        return F.conv2d(x, self.weight, self.stride, self.padding, self.layout)


class BatchNorm(Module):
    """Batch norm over the channel axis (1 by default) of an input of rank ≥ 2."""

    def __init__(self, channels, axis=1):
        super().__init__()
        self.axis = axis
        self.weight = Parameter(np.ones(channels))
        self.bias = Parameter(np.zeros(channels))
        self.register_buffer("running_mean", np.zeros(channels, dtype=np.float32))
        self.register_buffer("running_var", np.ones(channels, dtype=np.float32))

    def forward(self, x):
        return F.batch_norm(x, self.weight, self.bias, self.running_mean,
                            self.running_var, self.training, axis=self.axis)


class Linear(Module):
    def __init__(self, c_in, c_out, bias=True, rng=None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        bound = 1.0 / np.sqrt(c_in)
        self.weight = Parameter(rng.uniform(-bound, bound, (c_in, c_out)))
        self.bias = Parameter(np.zeros(c_out)) if bias else None

    def forward(self, x: Tensor):
        y = F.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y
