"""Minimal reverse-mode automatic differentiation on dense numpy arrays.

A ``Tensor`` wraps an ndarray and remembers how it was built; calling
``backward`` on a scalar root walks the graph in reverse topological order
and accumulates gradients into every node. Repeated backward calls on the
same graph keep accumulating, which is exactly what the per-objective
gradient loop of the neural genetic operators needs.

Also provides the network building blocks used by those operators: attention,
a fixed-step RK4 integrator whose steps stay in the graph, the rounding
straight-through estimator, and RMSProp.
"""

from __future__ import annotations

import json
import warnings

import numpy as np
from scipy.special import erf, expit


class GraphError(RuntimeError):
    """Contract violations: non-scalar backward roots, detached graphs."""


class ShapeError(ValueError):
    pass


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round halves away from zero (numpy's round goes to even)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "parents", "op", "_backward")

    def __init__(self, data, parents=(), op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.parents = tuple(parents)
        self.op = op
        self._backward = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r})"

    def accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self):
        self.grad = None

    # ---- graph traversal -------------------------------------------------

    def _topo(self) -> list["Tensor"]:
        order, visited, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                stack.append((parent, False))
        return order

    def backward(self, seed: float = 1.0):
        """Accumulate d(seed * self)/d(leaf) into every reachable leaf.

        The root must be scalar-valued. Leaf gradients are *added*, never
        reset, so looping over several scalar losses on one graph accumulates
        their weighted sum; interior gradients are scratch space reset per
        call, which keeps repeated backward passes on a shared graph exact.
        """
        if self.data.size != 1:
            raise GraphError("backward root must be a scalar")
        topo = self._topo()
        for node in topo:
            if node._backward is not None:
                node.grad = None
        self.accumulate(np.full_like(self.data, float(seed)))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # ---- operator sugar --------------------------------------------------

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __pow__(self, exponent):
        return power(self, exponent)


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def constant(value) -> Tensor:
    return Tensor(value)


# ---- arithmetic primitives ------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data, (a, b), "add")

    def _backward(g):
        a.accumulate(_unbroadcast(g, a.data.shape))
        b.accumulate(_unbroadcast(g, b.data.shape))

    out._backward = _backward
    return out


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data, (a,), "neg")
    out._backward = lambda g: a.accumulate(-g)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data, (a, b), "mul")

    def _backward(g):
        a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    out._backward = _backward
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data / b.data, (a, b), "div")

    def _backward(g):
        a.accumulate(_unbroadcast(g / b.data, a.data.shape))
        b.accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    out._backward = _backward
    return out


def power(a: Tensor, exponent: float) -> Tensor:
    p = float(exponent)
    out = Tensor(a.data**p, (a,), f"pow{p}")
    out._backward = lambda g: a.accumulate(g * p * a.data ** (p - 1.0))
    return out


def sqrt(a: Tensor) -> Tensor:
    return power(a, 0.5)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError("matmul expects 2-D operands")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.data.shape} @ {b.data.shape}")
    out = Tensor(a.data @ b.data, (a, b), "matmul")

    def _backward(g):
        a.accumulate(g @ b.data.T)
        b.accumulate(a.data.T @ g)

    out._backward = _backward
    return out


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum")

    def _backward(g):
        if axis is None:
            a.accumulate(np.broadcast_to(g, a.data.shape).copy())
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a.accumulate(np.broadcast_to(gg, a.data.shape).copy())

    out._backward = _backward
    return out


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else a.data.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


# ---- nonlinearities --------------------------------------------------------


def sigmoid(a: Tensor) -> Tensor:
    s = expit(a.data)
    out = Tensor(s, (a,), "sigmoid")
    out._backward = lambda g: a.accumulate(g * s * (1.0 - s))
    return out


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0), (a,), "relu")
    out._backward = lambda g: a.accumulate(g * (a.data > 0.0))
    return out


_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(a: Tensor) -> Tensor:
    """Exact Gaussian error linear unit x * Phi(x)."""
    phi_cdf = 0.5 * (1.0 + erf(a.data / _SQRT2))
    out = Tensor(a.data * phi_cdf, (a,), "gelu")

    def _backward(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * a.data * a.data)
        a.accumulate(g * (phi_cdf + a.data * pdf))

    out._backward = _backward
    return out


def sin(a: Tensor) -> Tensor:
    out = Tensor(np.sin(a.data), (a,), "sin")
    out._backward = lambda g: a.accumulate(g * np.cos(a.data))
    return out


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, (a,), "softmax")

    def _backward(g):
        inner = (g * y).sum(axis=axis, keepdims=True)
        a.accumulate(y * (g - inner))

    out._backward = _backward
    return out


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale-shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    out = Tensor(gamma.data * xhat + beta.data, (x, gamma, beta), "layer_norm")

    def _backward(g):
        d = x.data.shape[-1]
        lead = tuple(range(g.ndim - 1))
        gamma.accumulate(_unbroadcast((g * xhat).sum(axis=lead), gamma.data.shape))
        beta.accumulate(_unbroadcast(g.sum(axis=lead), beta.data.shape))
        dxhat = g * gamma.data
        x.accumulate(
            inv_std
            * (
                dxhat
                - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            )
        )

    out._backward = _backward
    return out


def dropout(a: Tensor, p: float, rng: np.random.Generator, train: bool) -> Tensor:
    """Inverted dropout; identity when evaluating or when p == 0."""
    if not train or p == 0.0:
        out = Tensor(a.data, (a,), "dropout_eval")
        out._backward = lambda g: a.accumulate(g)
        return out
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    mask = (rng.random(a.data.shape) >= p) / (1.0 - p)
    out = Tensor(a.data * mask, (a,), "dropout")
    out._backward = lambda g: a.accumulate(g * mask)
    return out


# ---- structural ops ---------------------------------------------------------


def concatenate(tensors: list[Tensor], axis: int = 0) -> Tensor:
    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = Tensor(data, tuple(tensors), "concat")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def _backward(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            index = [slice(None)] * g.ndim
            index[axis] = slice(start, stop)
            t.accumulate(g[tuple(index)])

    out._backward = _backward
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape), (a,), "reshape")
    out._backward = lambda g: a.accumulate(g.reshape(a.data.shape))
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.data.T, (a,), "transpose")
    out._backward = lambda g: a.accumulate(g.T)
    return out


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    out = Tensor(a.data[:, start:stop], (a,), "slice_cols")

    def _backward(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        a.accumulate(full)

    out._backward = _backward
    return out


def gather_rows(a: Tensor, row_index: np.ndarray) -> Tensor:
    """out[b, i] = a[row_index[b, i], i] for a constant integer index matrix."""
    idx = np.asarray(row_index, dtype=int)
    cols = np.broadcast_to(np.arange(a.data.shape[1]), idx.shape)
    out = Tensor(a.data[idx, cols], (a,), "gather_rows")

    def _backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, (idx, cols), g)
        a.accumulate(full)

    out._backward = _backward
    return out


def fractional_decouple(a: Tensor) -> Tensor:
    """Rounding straight-through estimator.

    Forward subtracts the (constant) fractional part so values land on the
    nearest integer, half away from zero; backward passes gradients through
    unchanged.
    """
    out = Tensor(round_half_away(a.data), (a,), "fractional_decouple")
    out._backward = lambda g: a.accumulate(g)
    return out


# ---- attention ---------------------------------------------------------------


def init_attention_params(d_model: int, rng: np.random.Generator) -> dict:
    scale = 1.0 / np.sqrt(d_model)
    params = {}
    for name in ("wq", "wk", "wv", "wo"):
        params[name] = Tensor(rng.normal(0.0, scale, size=(d_model, d_model)))
        params["b" + name[1]] = Tensor(np.zeros(d_model))
    return params


def multi_head_attention(
    query: Tensor,
    keys: Tensor,
    values: Tensor,
    n_heads: int,
    params: dict,
) -> tuple[Tensor, list[Tensor]]:
    """Scaled dot-product attention over 2-D token matrices (tokens, d_model).

    Returns the projected output and the per-head attention matrices, which
    stay differentiable graph nodes.
    """
    d_model = query.data.shape[1]
    if d_model % n_heads != 0:
        raise ShapeError(f"model width {d_model} not divisible by {n_heads} heads")
    dh = d_model // n_heads

    q = query @ params["wq"] + params["bq"]
    k = keys @ params["wk"] + params["bk"]
    v = values @ params["wv"] + params["bv"]

    heads, scores = [], []
    inv = 1.0 / np.sqrt(dh)
    for h in range(n_heads):
        qs = slice_cols(q, h * dh, (h + 1) * dh)
        ks = slice_cols(k, h * dh, (h + 1) * dh)
        vs = slice_cols(v, h * dh, (h + 1) * dh)
        attn = softmax((qs @ transpose(ks)) * inv, axis=-1)
        scores.append(attn)
        heads.append(attn @ vs)
    out = concatenate(heads, axis=1) @ params["wo"] + params["bo"]
    return out, scores


# ---- fixed-step ODE integration ----------------------------------------------


def ode_integrate(
    dynamics,
    x0: Tensor,
    t_span: tuple[float, float] = (0.0, 1.0),
    n_steps: int = 20,
    sample_times: list[float] | None = None,
) -> list[tuple[float, Tensor]]:
    """Classic fourth-order Runge-Kutta on a uniform grid, kept in-graph.

    ``dynamics`` maps a state Tensor to its time derivative. States at the
    requested sample times are returned as graph nodes; times that miss the
    grid are snapped to the nearest grid point with a warning. Gradients flow
    through every step back to ``x0`` and into the dynamics parameters.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    h = (t1 - t0) / n_steps
    grid = [t0 + i * h for i in range(n_steps + 1)]

    wanted = sorted(sample_times) if sample_times is not None else [t1]
    indices = []
    for t in wanted:
        i = int(round((t - t0) / h))
        i = min(max(i, 0), n_steps)
        if abs(grid[i] - t) > 1e-9:
            warnings.warn(
                f"sample time {t} is off-grid; snapped to {grid[i]}", stacklevel=2
            )
        indices.append(i)

    samples: list[tuple[float, Tensor]] = []
    x = x0
    if 0 in indices:
        samples.extend((grid[0], x) for i in indices if i == 0)
    for step in range(1, n_steps + 1):
        k1 = dynamics(x)
        k2 = dynamics(x + k1 * (h / 2.0))
        k3 = dynamics(x + k2 * (h / 2.0))
        k4 = dynamics(x + k3 * h)
        x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        for i in indices:
            if i == step:
                samples.append((grid[step], x))
    return samples


# ---- optimizer -----------------------------------------------------------------


class RMSProp:
    """Running-mean-of-squared-gradients optimizer.

    s <- decay * s + (1 - decay) * g^2 ;  p <- p - lr * g / (sqrt(s) + eps)
    """

    def __init__(self, params: list[Tensor], lr=1e-4, decay=0.99, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.decay = float(decay)
        self.eps = float(eps)
        self.square_avg = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        for p, s in zip(self.params, self.square_avg):
            if p.grad is None:
                continue
            s *= self.decay
            s += (1.0 - self.decay) * p.grad * p.grad
            p.data -= self.lr * p.grad / (np.sqrt(s) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


def rmsprop_step(
    param: np.ndarray,
    grad: np.ndarray,
    square_avg: np.ndarray,
    lr=1e-4,
    decay=0.99,
    eps=1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """Functional single-parameter RMSProp update (pure arrays in, arrays out)."""
    if param.shape != grad.shape:
        raise ShapeError("param/grad shapes differ")
    s = decay * square_avg + (1.0 - decay) * grad * grad
    return param - lr * grad / (np.sqrt(s) + eps), s


# ---- checkpoints -----------------------------------------------------------------

CHECKPOINT_FORMAT = "greenbasket-params"
CHECKPOINT_VERSION = 1


def save_params(named_params: dict[str, Tensor], path) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "tensors": {
            name: {"shape": list(t.data.shape), "data": t.data.ravel().tolist()}
            for name, t in named_params.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_params(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a parameter checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    return {
        name: np.asarray(entry["data"], dtype=float).reshape(entry["shape"])
        for name, entry in payload["tensors"].items()
    }
