"""Inference-network set encoder trained with a pairwise contrastive loss.

Stage one summarises every attribute (and the target) of a task by pooling a
per-value network over rows.  Stage two embeds every observation by pooling,
over attributes, a network applied to ``[attribute summary, value]`` and
adding the same network applied to ``[target summary, label]``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import tensor as T
from .data import Dataset
from .tensor import MLP, Tensor, TrainConfig, TrainResult


@dataclass
class LiltabConfig:
    hidden_representation_size: int = 32
    n_hidden_layers: int = 3
    hidden_size: int = 32
    dropout_rate: float = 0.1
    output_size: int | None = None
    n_datasets_per_batch: int = 4

    @property
    def p(self) -> int:
        return self.output_size or self.hidden_representation_size


def default_train_config(**overrides) -> TrainConfig:
    base = dict(num_epochs=100_000, learning_rate=1e-4, weight_decay=0.0,
                batch_size=37, early_stopping_epochs=2500, seed=0)
    base.update(overrides)
    return TrainConfig(**base)


@dataclass
class MarginalEncoding:
    nu_bar: np.ndarray
    c_bar: np.ndarray


@dataclass
class ContrastiveBatch:
    dataset_ids: list[str]
    groups: list[tuple[np.ndarray, np.ndarray]]
    labels: np.ndarray
    same_pairs: np.ndarray
    diff_pairs: np.ndarray


_NETS = ("f_nu", "g_nu", "f_c", "g_c", "f_u", "g_u")


class LiltabEncoder:
    def __init__(self, cfg: LiltabConfig | None = None, seed: int = 0):
        self.cfg = cfg or LiltabConfig()
        K, p = self.cfg.hidden_representation_size, self.cfg.p
        hidden = [self.cfg.hidden_size] * self.cfg.n_hidden_layers
        rng = np.random.default_rng(seed)
        rate = self.cfg.dropout_rate
        self.nets = {
            "f_nu": MLP([1, *hidden, K], rate, rng),
            "g_nu": MLP([K, *hidden, K], rate, rng),
            "f_c": MLP([1, *hidden, K], rate, rng),
            "g_c": MLP([K, *hidden, K], rate, rng),
            "f_u": MLP([K + 1, *hidden, K], rate, rng),
            "g_u": MLP([K, *hidden, p], rate, rng),
        }

    @property
    def output_size(self) -> int:
        return self.nets["g_u"].layer_sizes[-1]

    def parameters(self) -> list[Tensor]:
        return [p for name in _NETS for p in self.nets[name].parameters()]

    # ---- batched forward over several tasks at once

    def _marginals(self, cells, ys, training, rng):
        vals, attr_seg, n_attr, obs_group, n_groups = cells
        n = self.nets
        h = n["f_nu"](vals[:, None], training, rng)
        nu_bar = n["g_nu"](T.segment_mean(h, attr_seg, n_attr), training, rng)
        h = n["f_c"](ys[:, None], training, rng)
        c_bar = n["g_c"](T.segment_mean(h, obs_group, n_groups), training, rng)
        return nu_bar, c_bar

    def _observations(self, cells, ys, nu_bar, c_bar, obs_seg, training, rng):
        vals, attr_seg, _, obs_group, _ = cells
        n = self.nets
        attr_in = T.concat([T.take(nu_bar, attr_seg), Tensor(vals[:, None])], axis=1)
        per_attr = T.segment_mean(n["f_u"](attr_in, training, rng), obs_seg, len(ys))
        tgt_in = T.concat([T.take(c_bar, obs_group), Tensor(ys[:, None])], axis=1)
        return n["g_u"](per_attr + n["f_u"](tgt_in, training, rng), training, rng)

    def forward(self, groups: Sequence[tuple[np.ndarray, np.ndarray]], training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        """Observation embeddings for every row of every task, stacked in order."""
        cells, ys, obs_seg = _layout(groups)
        nu_bar, c_bar = self._marginals(cells, ys, training, rng)
        return self._observations(cells, ys, nu_bar, c_bar, obs_seg, training, rng)

    def embed_many(self, groups: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        """Dataset embeddings (mean of observation embeddings), dropout off."""
        u = self.forward(groups)
        sizes = [len(y) for _, y in groups]
        seg = np.repeat(np.arange(len(groups)), sizes)
        return T.segment_mean(u, seg, len(groups)).data

    # ---- persistence

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for name in _NETS:
            for li, layer in enumerate(self.nets[name].layers):
                out[f"{name}.{li}.weight"] = layer.weight.data
                out[f"{name}.{li}.bias"] = layer.bias.data
        return out

    def save(self, directory: str | Path, extra: dict | None = None) -> None:
        manifest = {"encoder": "liltab", "architecture": asdict(self.cfg)}
        manifest.update(extra or {})
        T.save_tensors(directory, manifest, self.state())

    @classmethod
    def load(cls, directory: str | Path) -> "LiltabEncoder":
        manifest, tensors = T.load_tensors(directory)
        if manifest.get("encoder") != "liltab":
            raise ValueError(f"{directory} does not hold a liltab encoder")
        enc = cls(LiltabConfig(**manifest["architecture"]))
        for name in _NETS:
            for li, layer in enumerate(enc.nets[name].layers):
                layer.weight.data = tensors[f"{name}.{li}.weight"].copy()
                layer.bias.data = tensors[f"{name}.{li}.bias"].copy()
        return enc


def _xy(task) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(task, Dataset):
        return task.features, task.target
    X, y = task
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)


def _layout(groups):
    """Flatten tasks into cell / observation index arrays for segment pooling."""
    vals, attr_seg, obs_seg, ys, obs_group = [], [], [], [], []
    a_off = o_off = 0
    for g, (X, y) in enumerate(groups):
        X = np.asarray(X, dtype=np.float64)
        N, I = X.shape
        if N < 1 or I < 1:
            raise ValueError("every task needs at least one row and one attribute")
        if len(y) != N:
            raise ValueError("target length does not match row count")
        vals.append(X.ravel())
        attr_seg.append(a_off + np.tile(np.arange(I), N))
        obs_seg.append(o_off + np.repeat(np.arange(N), I))
        ys.append(np.asarray(y, dtype=np.float64))
        obs_group.append(np.full(N, g))
        a_off += I
        o_off += N
    cells = (np.concatenate(vals), np.concatenate(attr_seg), a_off,
             np.concatenate(obs_group), len(groups))
    return cells, np.concatenate(ys), np.concatenate(obs_seg)


# --------------------------------------------------------------------------
# single-task operations


def encode_marginals(task, enc: LiltabEncoder) -> MarginalEncoding:
    X, y = _xy(task)
    if len(y) == 0:
        raise ValueError("cannot encode an empty task")
    cells, ys, _ = _layout([(X, y)])
    nu_bar, c_bar = enc._marginals(cells, ys, False, None)
    return MarginalEncoding(nu_bar.data, c_bar.data[0])


def encode_observations(task, marginals: MarginalEncoding, enc: LiltabEncoder) -> np.ndarray:
    X, y = _xy(task)
    K = enc.cfg.hidden_representation_size
    if marginals.nu_bar.shape != (X.shape[1], K) or marginals.c_bar.shape != (K,):
        raise ValueError("marginal encoding does not match the task's attributes")
    cells, ys, obs_seg = _layout([(X, y)])
    u = enc._observations(cells, ys, Tensor(marginals.nu_bar), Tensor(marginals.c_bar[None, :]),
                          obs_seg, False, None)
    return u.data


def embed_dataset(task, enc: LiltabEncoder) -> np.ndarray:
    return enc.embed_many([_xy(task)])[0]


# --------------------------------------------------------------------------
# contrastive objective


def pairs_from_labels(labels) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    i, j = np.triu_indices(len(labels), k=1)
    same = labels[i] == labels[j]
    return np.stack([i[same], j[same]], axis=1), np.stack([i[~same], j[~same]], axis=1)


def contrastive_loss(embeddings, same_pairs, diff_pairs):
    """Mean signed pair distance: same-origin pairs add, cross-origin pairs subtract.

    Returns a Tensor when given one, otherwise a float.
    """
    as_float = not isinstance(embeddings, Tensor)
    e = T.as_tensor(embeddings)
    S = np.asarray(same_pairs, dtype=np.intp).reshape(-1, 2)
    D = np.asarray(diff_pairs, dtype=np.intp).reshape(-1, 2)
    total = len(S) + len(D)
    if total == 0:
        raise ValueError("contrastive_loss needs at least one pair")
    loss = Tensor(0.0)
    if len(S):
        loss = loss + T.tsum(T.row_norm(T.take(e, S[:, 0]) - T.take(e, S[:, 1])))
    if len(D):
        loss = loss - T.tsum(T.row_norm(T.take(e, D[:, 0]) - T.take(e, D[:, 1])))
    loss = loss / total
    return loss.item() if as_float else loss


def build_contrastive_batch(datasets: Sequence[Dataset], n_datasets_per_batch: int,
                            n_rows_per_dataset: int, seed) -> ContrastiveBatch:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if len(datasets) < 2 or n_datasets_per_batch < 2:
        raise ValueError("a contrastive batch needs at least 2 datasets")
    chosen = list(datasets)
    if len(chosen) > n_datasets_per_batch:
        idx = np.sort(rng.choice(len(chosen), n_datasets_per_batch, replace=False))
        chosen = [chosen[i] for i in idx]
    groups, labels = [], []
    for g, ds in enumerate(chosen):
        if ds.n_rows < n_rows_per_dataset:
            raise ValueError(f"{ds.id}: has {ds.n_rows} rows, batch needs {n_rows_per_dataset}")
        rows = rng.choice(ds.n_rows, n_rows_per_dataset, replace=False)
        groups.append((ds.features[rows], ds.target[rows]))
        labels += [g] * n_rows_per_dataset
    labels = np.asarray(labels)
    same, diff = pairs_from_labels(labels)
    return ContrastiveBatch([d.id for d in chosen], groups, labels, same, diff)


def batch_loss(enc: LiltabEncoder, batch: ContrastiveBatch, training: bool = True,
               rng: np.random.Generator | None = None) -> Tensor:
    u = enc.forward(batch.groups, training=training, rng=rng)
    return contrastive_loss(u, batch.same_pairs, batch.diff_pairs)


def train_liltab(datasets: Sequence[Dataset], cfg: TrainConfig | None = None,
                 arch: LiltabConfig | None = None, log=None) -> tuple[LiltabEncoder, TrainResult]:
    """Fit a fresh encoder; every epoch visits each dataset once in shuffled groups."""
    if len(datasets) < 2:
        raise ValueError("train_liltab needs at least 2 datasets")
    cfg = cfg or default_train_config()
    arch = arch or LiltabConfig()
    enc = LiltabEncoder(arch, seed=cfg.seed)
    per_batch = max(2, min(arch.n_datasets_per_batch, len(datasets)))
    n_rows = max(1, cfg.batch_size // per_batch)

    def epoch_batches(epoch, rng):
        order = rng.permutation(len(datasets))
        chunks = [list(order[i:i + per_batch]) for i in range(0, len(order), per_batch)]
        if len(chunks) > 1 and len(chunks[-1]) == 1:
            chunks[-2] += chunks.pop()
        for chunk in chunks:
            group = [datasets[i] for i in chunk]
            rows = min(n_rows, min(d.n_rows for d in group))
            yield build_contrastive_batch(group, len(group), rows, rng)

    result = T.train_loop(enc.parameters(), epoch_batches,
                          lambda b, rng: batch_loss(enc, b, True, rng), cfg, log)
    return enc, result
