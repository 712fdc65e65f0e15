"""Central finite-difference check of :func:`backward` against :func:`mse_loss`."""

from __future__ import annotations

import numpy as np

from .lstm import LstmStack, backward, forward, mse_grad, mse_loss


# A central difference with h = 1e-5 carries about eps * |loss| / h ~ 1e-11 of
# rounding noise, so entries smaller than this are compared absolutely.
FLOOR = 1e-7


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = FLOOR) -> np.ndarray:
    """``|a - n| / max(|a|, |n|, floor)``; the floor keeps entries whose true
    gradient is ~0 from dividing rounding noise by itself."""
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)


def numeric_gradients(stack: LstmStack, x: np.ndarray, y: np.ndarray,
                      h: float = 1e-5) -> dict[str, np.ndarray]:
    grads = {}
    for name, p in stack.params.items():
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = mse_loss(forward(stack, x)[0], y)
            flat[j] = orig - h
            down = mse_loss(forward(stack, x)[0], y)
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * h)
        grads[name] = g
    return grads


def analytic_gradients(stack: LstmStack, x: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
    pred, cache = forward(stack, x)
    return backward(stack, cache, mse_grad(pred, y))


def gradient_check(stack: LstmStack, x: np.ndarray, y: np.ndarray,
                   h: float = 1e-5) -> dict[str, float]:
    """Max relative error per parameter tensor."""
    ana = analytic_gradients(stack, x, y)
    num = numeric_gradients(stack, x, y, h)
    return {k: float(relative_error(ana[k], num[k]).max()) for k in stack.params}


def tensor_relative_error(stack: LstmStack, x: np.ndarray, y: np.ndarray,
                          h: float = 1e-5) -> dict[str, float]:
    """``||a - n|| / max(||a||, ||n||)`` per parameter tensor."""
    ana = analytic_gradients(stack, x, y)
    num = numeric_gradients(stack, x, y, h)
    out = {}
    for k in stack.params:
        scale = max(np.linalg.norm(ana[k]), np.linalg.norm(num[k]))
        out[k] = float(np.linalg.norm(ana[k] - num[k]) / scale) if scale > 0 else 0.0
    return out
