"""Central finite-difference verification of analytic gradients.

Checks run in float64 with eps=1e-4; clone models with to_dtype(np.float64)
before calling.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-4


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-3)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def numeric_grad(f, x: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Central differences of scalar f at x, elementwise."""
    x = x.astype(np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return g


def check_input_gradient(model, loss_and_grad, x: np.ndarray) -> float:
    """Max relative error between backprop input gradient and finite differences.

    loss_and_grad(out) must return (scalar loss, dloss/dout).
    """
    out = model.forward(x)
    _, dout = loss_and_grad(out)
    model.zero_grads()
    gx = model.backward(dout)

    def f(xv):
        return loss_and_grad(model.forward(xv))[0]

    return rel_error(gx, numeric_grad(f, x))


def check_param_gradients(model, loss_and_grad, x: np.ndarray) -> float:
    out = model.forward(x)
    _, dout = loss_and_grad(out)
    model.zero_grads()
    model.backward(dout)
    analytic = {k: v.copy() for k, v in model.gradients().items()}

    worst = 0.0
    for i, layer in enumerate(model.layers):
        for name, p in layer.params.items():
            def f_param(pv, layer=layer, name=name):
                old = layer.params[name]
                layer.params[name] = pv
                loss = loss_and_grad(model.forward(x))[0]
                layer.params[name] = old
                return loss

            numeric = numeric_grad(f_param, p)
            worst = max(worst, rel_error(analytic[f"L{i}.{name}"], numeric))
    return worst
