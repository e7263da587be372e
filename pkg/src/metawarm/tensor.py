"""Small reverse-mode autodiff over float64 numpy arrays.

Only what the two set encoders need: dense affine maps, ReLU, pooling,
concatenation, row gathers, L2 norms, exp/log and clipping.  Everything
else (MLP, Adam, the early-stopping loop, parameter files) is built on top.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np


class Tensor:
    """An array node in the computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self) -> None:
        self.grad = None

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a Tensor is not supported")
        return mul(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, k):
        if k != 2:
            raise ValueError("only squaring is supported")
        return mul(self, self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(data, req, parents if req else (), backward if req else None)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        a._accumulate(-g)

    return _make(-a.data, (a,), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(a.data @ b.data, (a, b), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        a._accumulate(g * mask)

    return _make(np.where(mask, a.data, 0.0), (a,), backward)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def backward(g):
        a._accumulate(g * out)

    return _make(out, (a,), backward)


def log(a: Tensor) -> Tensor:
    def backward(g):
        a._accumulate(g / a.data)

    return _make(np.log(a.data), (a,), backward)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    inside = (a.data >= lo) & (a.data <= hi)

    def backward(g):
        a._accumulate(g * inside)

    return _make(np.clip(a.data, lo, hi), (a,), backward)


def tsum(a: Tensor, axis: int | None = None) -> Tensor:
    def backward(g):
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.shape))
        else:
            a._accumulate(np.broadcast_to(np.expand_dims(g, axis), a.shape))

    return _make(a.data.sum(axis=axis), (a,), backward)


def mean(a: Tensor, axis: int | None = None) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis), 1.0 / n)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward)


def take(a: Tensor, rows) -> Tensor:
    """Gather rows ``a[rows]``; repeated indices accumulate in the gradient."""
    rows = np.asarray(rows, dtype=np.intp)

    def backward(g):
        acc = np.zeros_like(a.data)
        np.add.at(acc, rows, g)
        a._accumulate(acc)

    return _make(a.data[rows], (a,), backward)


def segment_mean(a: Tensor, segments, n_segments: int) -> Tensor:
    """Mean of the rows of ``a`` grouped by integer segment id."""
    segments = np.asarray(segments, dtype=np.intp)
    counts = np.bincount(segments, minlength=n_segments).astype(np.float64)
    if np.any(counts == 0):
        raise ValueError("segment_mean: every segment needs at least one row")
    out = np.zeros((n_segments,) + a.shape[1:])
    np.add.at(out, segments, a.data)
    scale = (1.0 / counts).reshape((-1,) + (1,) * (a.data.ndim - 1))
    out *= scale

    def backward(g):
        a._accumulate((g * scale)[segments])

    return _make(out, (a,), backward)


def row_norm(a: Tensor) -> Tensor:
    """Euclidean norm along the last axis; subgradient 0 where the norm is 0."""
    nrm = np.sqrt(np.sum(a.data * a.data, axis=-1))

    def backward(g):
        safe = np.where(nrm > 0, nrm, 1.0)
        coef = np.where(nrm > 0, g / safe, 0.0)
        a._accumulate(a.data * coef[..., None])

    return _make(nrm, (a,), backward)


def norm(a: Tensor) -> Tensor:
    return row_norm(reshape(a, (-1,)))


def reshape(a: Tensor, shape) -> Tensor:
    def backward(g):
        a._accumulate(g.reshape(a.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def grad(loss_fn: Callable[..., Tensor], params: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Gradient of a scalar ``loss_fn(*params)`` with respect to each array."""
    leaves = [Tensor(np.array(p, dtype=np.float64), requires_grad=True) for p in params]
    loss = loss_fn(*leaves)
    if not isinstance(loss, Tensor) or loss.data.size != 1:
        raise ValueError("loss_fn must return a scalar Tensor")
    loss.backward()
    return [np.zeros_like(t.data) if t.grad is None else t.grad for t in leaves]


# --------------------------------------------------------------------------
# networks


def _kaiming_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Linear:
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        self.weight = Tensor(_kaiming_uniform(rng, d_in, d_out), requires_grad=True)
        self.bias = Tensor(np.zeros(d_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return matmul(x, self.weight) + self.bias

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = rng.random(x.shape) >= rate
    return mul(x, keep / (1.0 - rate))


class MLP:
    """Affine -> ReLU -> dropout for every hidden layer, plain affine output."""

    def __init__(self, layer_sizes: Sequence[int], dropout_rate: float = 0.0,
                 rng: np.random.Generator | None = None):
        if len(layer_sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        if not 0.0 <= dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.layer_sizes = [int(s) for s in layer_sizes]
        self.dropout_rate = float(dropout_rate)
        self.layers = [Linear(a, b, rng) for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:])]

    def __call__(self, x, training: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        x = as_tensor(x)
        if x.data.ndim != 2 or x.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"MLP expects (B, {self.layer_sizes[0]}) input, got {x.shape}")
        for layer in self.layers[:-1]:
            x = dropout(relu(layer(x)), self.dropout_rate, training, rng)
        return self.layers[-1](x)

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


def mlp_forward(net: MLP, x, training: bool = False, seed: int | None = None) -> Tensor:
    rng = np.random.default_rng(seed) if training else None
    return net(x, training=training, rng=rng)


# --------------------------------------------------------------------------
# optimisation


@dataclass
class AdamState:
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              lr: float, weight_decay: float = 0.0, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    """In-place Adam update with decoupled weight decay."""
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.step += 1
    t = state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient in adam_step")
        if weight_decay:
            p -= lr * weight_decay * p
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return state


@dataclass
class TrainConfig:
    num_epochs: int = 100
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    batch_size: int = 32
    early_stopping_epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.num_epochs < 0:
            raise ValueError("num_epochs must be >= 0")
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.early_stopping_epochs <= 0:
            raise ValueError("learning_rate, batch_size and early_stopping_epochs must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


@dataclass
class TrainResult:
    history: list[float]
    best_epoch: int | None
    stopped_early: bool


def train_loop(params: Sequence[Tensor],
               epoch_batches: Callable[[int, np.random.Generator], Iterable],
               loss_fn: Callable[[object, np.random.Generator], Tensor],
               cfg: TrainConfig,
               log: Callable[[int, float], None] | None = None) -> TrainResult:
    """Minimise ``loss_fn`` with Adam, stopping early on a stalled training loss.

    One epoch is the list of batches returned by ``epoch_batches(epoch, rng)``;
    its loss is the mean batch loss.  Training ends after ``num_epochs`` or once
    ``early_stopping_epochs`` epochs in a row fail to strictly beat the best
    loss so far.  Parameters are restored to the best epoch before returning.
    """
    rng = np.random.default_rng(cfg.seed)
    state = AdamState()
    history: list[float] = []
    best = math.inf
    best_epoch = None
    best_values = [p.data.copy() for p in params]
    stale = 0
    stopped = False
    for epoch in range(cfg.num_epochs):
        losses = []
        for batch in epoch_batches(epoch, rng):
            for p in params:
                p.zero_grad()
            loss = loss_fn(batch, rng)
            value = loss.item()
            if not math.isfinite(value):
                raise FloatingPointError(f"non-finite loss {value} at epoch {epoch}")
            loss.backward()
            grads = [np.zeros_like(p.data) if p.grad is None else p.grad for p in params]
            adam_step(state, [p.data for p in params], grads, cfg.learning_rate, cfg.weight_decay)
            losses.append(value)
        epoch_loss = float(np.mean(losses)) if losses else math.nan
        history.append(epoch_loss)
        if log is not None:
            log(epoch, epoch_loss)
        if epoch_loss < best:
            best, best_epoch, stale = epoch_loss, epoch, 0
            best_values = [p.data.copy() for p in params]
        else:
            stale += 1
            if stale >= cfg.early_stopping_epochs:
                stopped = True
                break
    for p, v in zip(params, best_values):
        p.data[...] = v
    return TrainResult(history, best_epoch, stopped)


# --------------------------------------------------------------------------
# parameter files


def save_tensors(directory: str | Path, manifest: dict, tensors: dict[str, np.ndarray]) -> None:
    """Write ``manifest.json`` plus one little-endian float64 blob per tensor."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (name, arr) in enumerate(tensors.items()):
        fname = f"{i:03d}.f64"
        arr = np.asarray(arr, dtype=np.float64)
        (directory / fname).write_bytes(arr.astype("<f8").tobytes())
        entries.append({"name": name, "shape": list(arr.shape), "file": fname})
    doc = dict(manifest)
    doc["tensors"] = entries
    (directory / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_tensors(directory: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    directory = Path(directory)
    doc = json.loads((directory / "manifest.json").read_text())
    tensors = {}
    for entry in doc.pop("tensors"):
        raw = np.frombuffer((directory / entry["file"]).read_bytes(), dtype="<f8")
        tensors[entry["name"]] = raw.astype(np.float64).reshape(entry["shape"])
    return doc, tensors
