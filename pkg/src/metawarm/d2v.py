"""DeepSet dataset encoder trained to tell whether two views share an origin.

``phi(D) = h(mean_i g(mean_n f([x_ni, y_n])))``: ``f`` embeds every
(value, label) cell, the inner mean pools rows, ``g`` maps each attribute
summary, the outer mean pools attributes and ``h`` produces the embedding.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import tensor as T
from .data import Dataset
from .tensor import Linear, Tensor, TrainConfig, TrainResult

PROB_CLAMP = 1e-12


@dataclass
class D2VConfig:
    gamma: float = 1.0
    f_dense_hidden_size: int = 16
    f_res_hidden_size: int = 16
    f_res_n_hidden: int = 3
    f_dense_out_hidden_size: int = 16
    f_block_repetitions: int = 3
    g_layers_sizes: list[int] = field(default_factory=lambda: [32, 16, 8])
    h_dense_hidden_size: int = 32
    h_res_hidden_size: int = 32
    h_res_n_hidden: int = 3
    h_dense_out_hidden_size: int = 16
    h_block_repetitions: int = 3
    train_n_batches: int = 100
    min_view_rows: int = 8
    max_view_rows: int = 32

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def default_train_config(**overrides) -> TrainConfig:
    base = dict(num_epochs=100_000, learning_rate=1e-3, weight_decay=1e-4,
                batch_size=16, early_stopping_epochs=500, seed=0)
    base.update(overrides)
    return TrainConfig(**base)


class ResidualBlock:
    """``x + relu(...relu(affine(x)))`` with widths restored to the input size."""

    def __init__(self, width: int, hidden: int, n_hidden: int, rng: np.random.Generator):
        if n_hidden < 1:
            raise ValueError("a residual block needs at least one layer")
        sizes = [width] + [hidden] * (n_hidden - 1) + [width]
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]

    def __call__(self, x: Tensor) -> Tensor:
        h = x
        for layer in self.layers:
            h = T.relu(layer(h))
        return x + h

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


class ResidualStage:
    """Entry adapter (affine + relu), residual blocks, plain affine exit."""

    def __init__(self, d_in: int, width: int, hidden: int, n_hidden: int, reps: int,
                 d_out: int, rng: np.random.Generator):
        self.entry = Linear(d_in, width, rng)
        self.blocks = [ResidualBlock(width, hidden, n_hidden, rng) for _ in range(reps)]
        self.exit = Linear(width, d_out, rng)

    def __call__(self, x: Tensor) -> Tensor:
        h = T.relu(self.entry(x))
        for block in self.blocks:
            h = block(h)
        return self.exit(h)

    def modules(self):
        return [self.entry] + self.blocks + [self.exit]

    def parameters(self) -> list[Tensor]:
        return [p for m in self.modules() for p in m.parameters()]


class GStage:
    """Affine + relu for every listed width."""

    def __init__(self, d_in: int, sizes: Sequence[int], rng: np.random.Generator):
        dims = [d_in, *sizes]
        self.layers = [Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:])]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = T.relu(layer(x))
        return x

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


class D2VEncoder:
    def __init__(self, cfg: D2VConfig | None = None, seed: int = 0):
        self.cfg = c = cfg or D2VConfig()
        rng = np.random.default_rng(seed)
        self.f = ResidualStage(2, c.f_dense_hidden_size, c.f_res_hidden_size, c.f_res_n_hidden,
                               c.f_block_repetitions, c.f_dense_out_hidden_size, rng)
        self.g = GStage(c.f_dense_out_hidden_size, c.g_layers_sizes, rng)
        g_out = c.g_layers_sizes[-1] if c.g_layers_sizes else c.f_dense_out_hidden_size
        self.h = ResidualStage(g_out, c.h_dense_hidden_size, c.h_res_hidden_size, c.h_res_n_hidden,
                               c.h_block_repetitions, c.h_dense_out_hidden_size, rng)

    @property
    def gamma(self) -> float:
        return self.cfg.gamma

    @property
    def output_size(self) -> int:
        return self.cfg.h_dense_out_hidden_size

    def parameters(self) -> list[Tensor]:
        return self.f.parameters() + self.g.parameters() + self.h.parameters()

    def forward(self, views: Sequence[tuple[np.ndarray, np.ndarray]]) -> Tensor:
        """Embeddings of several (X, y) views, one row per view."""
        vals, ys, cell_attr, attr_view = [], [], [], []
        a_off = 0
        for v, (X, y) in enumerate(views):
            X = np.asarray(X, dtype=np.float64)
            N, I = X.shape
            if N < 1 or I < 1:
                raise ValueError("every view needs at least one row and one attribute")
            vals.append(X.ravel())
            ys.append(np.repeat(np.asarray(y, dtype=np.float64), I))
            cell_attr.append(a_off + np.tile(np.arange(I), N))
            attr_view.append(np.full(I, v))
            a_off += I
        cells = Tensor(np.stack([np.concatenate(vals), np.concatenate(ys)], axis=1))
        per_attr = T.segment_mean(self.f(cells), np.concatenate(cell_attr), a_off)
        per_view = T.segment_mean(self.g(per_attr), np.concatenate(attr_view), len(views))
        return self.h(per_view)

    def embed_many(self, views) -> np.ndarray:
        return self.forward(views).data

    def _stages(self):
        return {"f": self.f.modules(), "g": self.g.layers, "h": self.h.modules()}

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for sname, mods in self._stages().items():
            for mi, mod in enumerate(mods):
                for pi, p in enumerate(mod.parameters()):
                    out[f"{sname}.{mi}.{pi}"] = p.data
        return out

    def save(self, directory: str | Path, extra: dict | None = None) -> None:
        manifest = {"encoder": "d2v", "architecture": asdict(self.cfg)}
        manifest.update(extra or {})
        T.save_tensors(directory, manifest, self.state())

    @classmethod
    def load(cls, directory: str | Path) -> "D2VEncoder":
        manifest, tensors = T.load_tensors(directory)
        if manifest.get("encoder") != "d2v":
            raise ValueError(f"{directory} does not hold a d2v encoder")
        enc = cls(D2VConfig(**manifest["architecture"]))
        for sname, mods in enc._stages().items():
            for mi, mod in enumerate(mods):
                for pi, p in enumerate(mod.parameters()):
                    p.data = tensors[f"{sname}.{mi}.{pi}"].copy()
        return enc


def d2v_embed(task, enc: D2VEncoder) -> np.ndarray:
    if isinstance(task, Dataset):
        task = (task.features, task.target)
    return enc.embed_many([task])[0]


def same_dataset_probability(e1, e2, gamma: float = 1.0):
    """``exp(-gamma * ||e1 - e2||)``; accepts arrays or Tensors."""
    if isinstance(e1, Tensor) or isinstance(e2, Tensor):
        return T.exp(T.row_norm(T.as_tensor(e1) - T.as_tensor(e2)) * (-gamma))
    e1, e2 = np.asarray(e1, dtype=np.float64), np.asarray(e2, dtype=np.float64)
    if e1.shape != e2.shape:
        raise ValueError(f"embedding shapes differ: {e1.shape} vs {e2.shape}")
    return float(np.exp(-gamma * np.linalg.norm(e1 - e2)))


@dataclass
class BatchPair:
    view_a: tuple[np.ndarray, np.ndarray]
    view_b: tuple[np.ndarray, np.ndarray]
    same_origin: bool


def pair_bce(p: Tensor, labels) -> Tensor:
    """Mean binary cross-entropy with probabilities clamped away from 0 and 1."""
    y = np.asarray(labels, dtype=np.float64)
    p = T.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    ll = T.log(p) * y + T.log(1.0 - p) * (1.0 - y)
    return -T.mean(ll)


def pair_loss_from_embeddings(emb_a, emb_b, labels, gamma: float) -> Tensor:
    return pair_bce(same_dataset_probability(T.as_tensor(emb_a), T.as_tensor(emb_b), gamma), labels)


def d2v_loss(pairs: Sequence[BatchPair], enc: D2VEncoder) -> Tensor:
    if not pairs:
        raise ValueError("d2v_loss needs at least one pair")
    emb = enc.forward([p.view_a for p in pairs] + [p.view_b for p in pairs])
    n = len(pairs)
    a, b = T.take(emb, np.arange(n)), T.take(emb, np.arange(n, 2 * n))
    return pair_loss_from_embeddings(a, b, [p.same_origin for p in pairs], enc.gamma)


def sample_view(ds: Dataset, rng: np.random.Generator, min_rows: int = 8,
                max_rows: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Random rows (count uniform in [min_rows, max_rows], capped by N) and columns."""
    hi = min(max_rows, ds.n_rows)
    lo = min(min_rows, hi)
    n = int(rng.integers(lo, hi + 1))
    m = int(rng.integers(1, ds.n_features + 1))
    rows = np.sort(rng.choice(ds.n_rows, n, replace=False))
    cols = np.sort(rng.choice(ds.n_features, m, replace=False))
    return ds.features[np.ix_(rows, cols)], ds.target[rows]


def sample_pairs(datasets: Sequence[Dataset], n_pairs: int, rng: np.random.Generator,
                 min_rows: int = 8, max_rows: int = 32) -> list[BatchPair]:
    """Half same-origin, half cross-origin view pairs (same-origin first)."""
    if len(datasets) < 2:
        raise ValueError("pair sampling needs at least 2 datasets")
    out = []
    for k in range(n_pairs):
        same = k < (n_pairs + 1) // 2
        if same:
            a = b = int(rng.integers(len(datasets)))
        else:
            a, b = (int(i) for i in rng.choice(len(datasets), 2, replace=False))
        out.append(BatchPair(sample_view(datasets[a], rng, min_rows, max_rows),
                             sample_view(datasets[b], rng, min_rows, max_rows), same))
    return out


def train_d2v(datasets: Sequence[Dataset], cfg: TrainConfig | None = None,
              arch: D2VConfig | None = None, log=None) -> tuple[D2VEncoder, TrainResult]:
    if len(datasets) < 2:
        raise ValueError("train_d2v needs at least 2 datasets")
    cfg = cfg or default_train_config()
    arch = arch or D2VConfig()
    enc = D2VEncoder(arch, seed=cfg.seed)

    def epoch_batches(epoch, rng):
        for _ in range(arch.train_n_batches):
            yield sample_pairs(datasets, cfg.batch_size, rng, arch.min_view_rows, arch.max_view_rows)

    result = T.train_loop(enc.parameters(), epoch_batches, lambda b, rng: d2v_loss(b, enc), cfg, log)
    return enc, result
