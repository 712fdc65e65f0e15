"""Multi-layer LSTM regressor with a per-timestep linear head, in float64.

Parameters live in a flat ``{name: array}`` mapping so the optimizer, the
gradient checker and the checkpoint format can walk them uniformly::

    lstm.{l}.W  (4u, in)   input weights, gate blocks ordered i, f, g, o
    lstm.{l}.U  (4u, u)    recurrent weights
    lstm.{l}.b  (4u,)      biases (forget block initialized to 1.0)
    head.w      (u,)
    head.b      (1,)

Per timestep and layer::

    i, f, o = sigmoid(.),  g = tanh(.)
    c = f * c + i * g
    h = o * tanh(c)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from ..errors import ShapeMismatch
from ..rng import SplitMix64

FORGET_BIAS = 1.0


class LstmLayerParams(NamedTuple):
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray


@dataclass(eq=False)
class LstmStack:
    params: dict[str, np.ndarray]

    @property
    def n_layers(self) -> int:
        return sum(1 for k in self.params if k.endswith(".W"))

    @property
    def units(self) -> int:
        return self.params["head.w"].shape[0]

    def layer(self, l: int) -> LstmLayerParams:
        p = self.params
        return LstmLayerParams(p[f"lstm.{l}.W"], p[f"lstm.{l}.U"], p[f"lstm.{l}.b"])

    def copy(self) -> "LstmStack":
        return LstmStack({k: v.copy() for k, v in self.params.items()})

    def equals(self, other: "LstmStack") -> bool:
        return self.params.keys() == other.params.keys() and all(
            self.params[k].tobytes() == other.params[k].tobytes() for k in self.params)


def param_shapes(layers: int, units: int, input_dim: int = 1) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for l in range(layers):
        fan_in = input_dim if l == 0 else units
        shapes[f"lstm.{l}.W"] = (4 * units, fan_in)
        shapes[f"lstm.{l}.U"] = (4 * units, units)
        shapes[f"lstm.{l}.b"] = (4 * units,)
    shapes["head.w"] = (units,)
    shapes["head.b"] = (1,)
    return shapes


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(layers: int, units: int, seed: int) -> LstmStack:
    """Glorot-uniform weights, zero biases, forget-gate bias 1.0.

    Input and recurrent weights of a layer are drawn as one
    ``(in + u) x 4u`` kernel, so both share the limit
    ``sqrt(6 / (in + u + 4u))``.
    """
    if layers not in (2, 3):
        raise ValueError("layers must be 2 or 3")
    if units < 1:
        raise ValueError("units must be positive")
    rng = SplitMix64(seed)
    shapes = param_shapes(layers, units)

    def uniform(shape, limit):
        return (2.0 * rng.uniform(int(np.prod(shape))) - 1.0).reshape(shape) * limit

    params = {}
    for l in range(layers):
        fan_in = shapes[f"lstm.{l}.W"][1]
        limit = glorot_limit(fan_in + units, 4 * units)
        params[f"lstm.{l}.W"] = uniform(shapes[f"lstm.{l}.W"], limit)
        params[f"lstm.{l}.U"] = uniform(shapes[f"lstm.{l}.U"], limit)
        b = np.zeros(4 * units)
        b[units:2 * units] = FORGET_BIAS
        params[f"lstm.{l}.b"] = b
    params["head.w"] = uniform((units,), glorot_limit(units, 1))
    params["head.b"] = np.zeros(1)
    return LstmStack(params)


class LayerCache(NamedTuple):
    inputs: np.ndarray  # (T, B, in)
    gates: np.ndarray  # (T, B, 4u) after nonlinearity
    cells: np.ndarray  # (T, B, u)
    tanh_cells: np.ndarray  # (T, B, u)
    hidden: np.ndarray  # (T, B, u)


class ForwardCache(NamedTuple):
    layers: list[LayerCache]
    squeeze: bool


def forward(stack: LstmStack, audio: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the stack over ``(T,)`` or ``(B, T)`` inputs from zero initial state.

    Returns predictions of the same shape and the activations BPTT needs.
    """
    x = np.asarray(audio, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] < 1:
        raise ShapeMismatch(f"expected (T,) or (B, T) input, got {np.shape(audio)}")
    inp = np.ascontiguousarray(x.T)[:, :, None]
    T, B = x.shape[1], x.shape[0]
    u = stack.units
    caches = []
    for l in range(stack.n_layers):
        W, U, b = stack.layer(l)
        zx = inp @ W.T + b
        gates = np.empty((T, B, 4 * u))
        cells = np.empty((T, B, u))
        tanh_cells = np.empty((T, B, u))
        hidden = np.empty((T, B, u))
        h = np.zeros((B, u))
        c = np.zeros((B, u))
        UT = U.T
        for t in range(T):
            z = zx[t] + h @ UT
            a = gates[t]
            a[:, :2 * u] = expit(z[:, :2 * u])
            a[:, 2 * u:3 * u] = np.tanh(z[:, 2 * u:3 * u])
            a[:, 3 * u:] = expit(z[:, 3 * u:])
            c = a[:, u:2 * u] * c + a[:, :u] * a[:, 2 * u:3 * u]
            tc = np.tanh(c)
            h = a[:, 3 * u:] * tc
            cells[t] = c
            tanh_cells[t] = tc
            hidden[t] = h
        caches.append(LayerCache(inp, gates, cells, tanh_cells, hidden))
        inp = hidden
    y = inp @ stack.params["head.w"] + stack.params["head.b"][0]  # (T, B)
    pred = np.ascontiguousarray(y.T)
    return (pred[0] if squeeze else pred), ForwardCache(caches, squeeze)


def backward(stack: LstmStack, cache: ForwardCache, d_pred: np.ndarray) -> dict[str, np.ndarray]:
    """Full backpropagation through time; returns a gradient per parameter."""
    dy = np.asarray(d_pred, dtype=np.float64)
    if cache.squeeze:
        dy = dy[None, :]
    dyT = dy.T  # (T, B)
    top = cache.layers[-1].hidden
    if dyT.shape != top.shape[:2]:
        raise ShapeMismatch(f"gradient shape {np.shape(d_pred)} does not match the forward pass")
    u = stack.units
    grads = {
        "head.w": np.einsum("tb,tbu->u", dyT, top),
        "head.b": np.array([dyT.sum()]),
    }
    dH = dyT[:, :, None] * stack.params["head.w"]
    for l in reversed(range(stack.n_layers)):
        W, U, _ = stack.layer(l)
        lc = cache.layers[l]
        T, B = dH.shape[:2]
        dZ = np.empty((T, B, 4 * u))
        dh_next = np.zeros((B, u))
        dc_next = np.zeros((B, u))
        for t in reversed(range(T)):
            a = lc.gates[t]
            i, f, g, o = a[:, :u], a[:, u:2 * u], a[:, 2 * u:3 * u], a[:, 3 * u:]
            tc = lc.tanh_cells[t]
            dh = dH[t] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            dz = dZ[t]
            dz[:, :u] = dc * g * i * (1.0 - i)
            if t > 0:
                dz[:, u:2 * u] = dc * lc.cells[t - 1] * f * (1.0 - f)
            else:
                dz[:, u:2 * u] = 0.0
            dz[:, 2 * u:3 * u] = dc * i * (1.0 - g * g)
            dz[:, 3 * u:] = dh * tc * o * (1.0 - o)
            dc_next = dc * f
            dh_next = dz @ U
        flat = dZ.reshape(T * B, 4 * u)
        h_prev = np.concatenate([np.zeros((1, B, u)), lc.hidden[:-1]]).reshape(T * B, u)
        grads[f"lstm.{l}.U"] = flat.T @ h_prev
        grads[f"lstm.{l}.W"] = flat.T @ lc.inputs.reshape(T * B, -1)
        grads[f"lstm.{l}.b"] = flat.sum(axis=0)
        dH = dZ @ W
    return {k: grads[k] for k in stack.params}


def mse_loss(prediction: np.ndarray, target: np.ndarray) -> float:
    """Mean over batch and time of the squared error."""
    p = np.asarray(prediction, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeMismatch(f"prediction {p.shape} vs target {y.shape}")
    return float(np.mean((p - y) ** 2))


def mse_grad(prediction: np.ndarray, target: np.ndarray, count: int | None = None) -> np.ndarray:
    """d(mse)/d(prediction). ``count`` overrides the divisor, for when a
    batch is split into chunks that share one mean."""
    p = np.asarray(prediction, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeMismatch(f"prediction {p.shape} vs target {y.shape}")
    return 2.0 * (p - y) / (p.size if count is None else count)
