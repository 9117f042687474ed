"""Adam with bias correction, as a pure step on named tensors and as a
model-bound optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected Adam update; mutates params/state and returns them."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergedError("diverged")
        p = params[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} ({name})")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m += (1.0 - b1) * (g - m)
        v += (1.0 - b2) * (g * g - v)
        p -= (state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype)
    return params, state


class Adam:
    """Adam bound to a Model's parameters/gradients."""

    def __init__(self, model, lr: float):
        self.model = model
        self.state = AdamState(lr=lr)

    def step(self):
        adam_step(self.model.parameters(), self.model.gradients(), self.state)
        self.model.zero_grads()
