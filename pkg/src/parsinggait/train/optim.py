from __future__ import annotations

import numpy as np


class SGD:
    """Heavy-ball SGD with L2 weight decay folded into the gradient.

    v <- momentum·v + grad + weight_decay·p ;  p <- p - lr·v
    """

    def __init__(self, named_params, momentum=0.9, weight_decay=5e-4):
        self.params = dict(named_params)
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buffers = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def step(self, lr: float):
        sgd_step(self.params, self.buffers, lr, self.momentum, self.weight_decay)

    def state_dict(self):
        return {f"optim.momentum.{k}": v for k, v in self.buffers.items()}

    def load_state_dict(self, state):
        for k in self.buffers:
            self.buffers[k] = np.array(state[f"optim.momentum.{k}"], dtype=self.buffers[k].dtype)


def sgd_step(params: dict, buffers: dict, lr, momentum, weight_decay):
    for name, p in params.items():
        if p.grad is None:
            raise ValueError(f"parameter {name} has no gradient")
        v = buffers[name]
        dt = p.data.dtype.type
        v *= dt(momentum)
        v += p.grad
        if weight_decay:
            v += dt(weight_decay) * p.data
        p.data -= dt(lr) * v
