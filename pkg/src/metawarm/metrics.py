"""Representation probes and HPO comparison statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .d2v import sample_view
from .data import Dataset
from .hpo.bo import OptimizationTrace
from .hpo.matrix import PerformanceMatrix

# Studentized range quantiles at infinite df divided by sqrt(2), k = 2..10.
NEMENYI_Q = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}


@dataclass
class AdtmReport:
    method: str
    mean: np.ndarray
    per_fold: dict[int, np.ndarray] = field(default_factory=dict)
    per_dataset: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)


@dataclass
class ProbeReport:
    accuracy_mean: float
    accuracy_std: float
    ch_mean: float
    ch_std: float
    repetitions: int


def dtm_trajectory(trace: OptimizationTrace, matrix: PerformanceMatrix) -> np.ndarray:
    """1 minus the min-max scaled incumbent AUC after each iteration."""
    row = matrix.row(trace.dataset_id)
    lo, hi = row.min(), row.max()
    if hi <= lo:
        raise ValueError(f"{trace.dataset_id}: constant matrix row, cannot scale")
    scaled = (np.array([s.raw_auc for s in trace.steps]) - lo) / (hi - lo)
    return 1.0 - np.maximum.accumulate(scaled)


def adtm(traces: Sequence[OptimizationTrace], matrix: PerformanceMatrix,
         method: str | None = None) -> AdtmReport:
    """Average distance to the best pool AUC, per iteration, over datasets."""
    if not traces:
        raise ValueError("adtm needs at least one trace")
    method = method if method is not None else traces[0].method
    per_dataset = {(t.dataset_id, t.fold): dtm_trajectory(t, matrix) for t in traces}
    lengths = {len(v) for v in per_dataset.values()}
    if len(lengths) != 1:
        raise ValueError("traces have different lengths")
    folds: dict[int, list[np.ndarray]] = {}
    for (d, f), v in per_dataset.items():
        folds.setdefault(f, []).append(v)
    per_fold = {f: np.mean(v, axis=0) for f, v in sorted(folds.items())}
    mean = np.mean(list(per_dataset.values()), axis=0)
    return AdtmReport(method, mean, per_fold, per_dataset)


def aggregate_folds(trajectories: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise mean and 95% normal-approximation CI half-width across folds."""
    arr = [np.asarray(t, dtype=np.float64) for t in trajectories]
    if len(arr) < 2:
        raise ValueError("need at least two folds")
    if len({a.shape for a in arr}) != 1:
        raise ValueError("fold trajectories have different lengths")
    arr = np.stack(arr)
    return arr.mean(axis=0), 1.96 * arr.std(axis=0, ddof=1) / math.sqrt(len(arr))


def calinski_harabasz(embeddings, labels) -> float:
    """Between/within scatter ratio; ``inf`` when all clusters are single points."""
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    M, k = len(X), len(uniq)
    if k < 2 or M <= k:
        raise ValueError(f"calinski_harabasz needs 2 <= clusters < points, got k={k}, M={M}")
    grand = X.mean(axis=0)
    between = within = 0.0
    for u in uniq:
        pts = X[labels == u]
        c = pts.mean(axis=0)
        between += len(pts) * float(np.sum((c - grand) ** 2))
        within += float(np.sum((pts - c) ** 2))
    if within == 0.0:
        return math.inf
    return (between / (k - 1)) / (within / (M - k))


def average_ranks(scores, lower_is_better: bool = True) -> np.ndarray:
    """Per-block ranks (1 = best, ties averaged) for a methods x blocks array."""
    s = np.asarray(scores, dtype=np.float64)
    s = s if lower_is_better else -s
    return np.apply_along_axis(rankdata, 0, s)


def friedman_test(scores, lower_is_better: bool = True) -> tuple[float, np.ndarray]:
    """Friedman chi-square statistic and mean rank of every method.

    ``scores`` is methods x blocks.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < 2 or s.shape[1] < 2:
        raise ValueError("friedman_test needs at least 2 methods and 2 blocks")
    k, n = s.shape
    mean_ranks = average_ranks(s, lower_is_better).mean(axis=1)
    stat = 12.0 * n / (k * (k + 1)) * (np.sum(mean_ranks ** 2) - k * (k + 1) ** 2 / 4.0)
    return float(stat), mean_ranks


def nemenyi_cd(k: int, n: int, alpha: float = 0.05) -> float:
    """Critical difference in mean rank for ``k`` methods over ``n`` blocks."""
    if alpha not in NEMENYI_Q:
        raise ValueError(f"alpha must be one of {sorted(NEMENYI_Q)}")
    if not 2 <= k <= 10:
        raise ValueError("nemenyi_cd supports 2 <= k <= 10")
    if n < 1:
        raise ValueError("need at least one block")
    return NEMENYI_Q[alpha][k - 2] * math.sqrt(k * (k + 1) / (6.0 * n))


# --------------------------------------------------------------------------
# representation probes

EmbedFn = Callable[[Sequence[tuple[np.ndarray, np.ndarray]]], np.ndarray]


def pair_accuracy(embed: EmbedFn, datasets: Sequence[Dataset], n_pairs: int,
                  rng: np.random.Generator, gamma: float = 1.0,
                  min_rows: int = 8, max_rows: int = 32) -> float:
    """Accuracy of ``exp(-gamma * distance) > 0.5`` on balanced same/different view pairs."""
    if len(datasets) < 2:
        raise ValueError("pair accuracy needs at least 2 datasets")
    views_a, views_b, same = [], [], []
    for k in range(n_pairs):
        is_same = k % 2 == 0
        if is_same:
            a = b = int(rng.integers(len(datasets)))
        else:
            a, b = (int(i) for i in rng.choice(len(datasets), 2, replace=False))
        views_a.append(sample_view(datasets[a], rng, min_rows, max_rows))
        views_b.append(sample_view(datasets[b], rng, min_rows, max_rows))
        same.append(is_same)
    emb = embed(views_a + views_b)
    dist = np.linalg.norm(emb[:n_pairs] - emb[n_pairs:], axis=1)
    pred = np.exp(-gamma * dist) > 0.5
    return float(np.mean(pred == np.array(same)))


def pair_accuracy_probe(embed: EmbedFn, datasets: Sequence[Dataset], n_pairs: int = 200,
                        repetitions: int = 15, seed: int = 0, gamma: float = 1.0) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    acc = [pair_accuracy(embed, datasets, n_pairs, rng, gamma) for _ in range(repetitions)]
    return float(np.mean(acc)), float(np.std(acc))


def ch_probe(embed: EmbedFn, datasets: Sequence[Dataset], views_per_dataset: int = 20,
             repetitions: int = 15, seed: int = 0) -> tuple[float, float]:
    """CH index of view embeddings labelled by their source dataset."""
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(repetitions):
        views, labels = [], []
        for i, ds in enumerate(datasets):
            for _ in range(views_per_dataset):
                views.append(sample_view(ds, rng))
                labels.append(i)
        vals.append(calinski_harabasz(embed(views), labels))
    if np.isinf(vals).any():
        # the sentinel has no spread; std is 0 only when every repetition hit it
        return math.inf, 0.0 if np.isinf(vals).all() else math.nan
    return float(np.mean(vals)), float(np.std(vals))


def probe_encoder(embed: EmbedFn, datasets: Sequence[Dataset], n_pairs: int = 200,
                  views_per_dataset: int = 20, repetitions: int = 15, seed: int = 0,
                  gamma: float = 1.0) -> ProbeReport:
    acc_m, acc_s = pair_accuracy_probe(embed, datasets, n_pairs, repetitions, seed, gamma)
    ch_m, ch_s = ch_probe(embed, datasets, views_per_dataset, repetitions, seed + 1)
    return ProbeReport(acc_m, acc_s, ch_m, ch_s, repetitions)


def pca_2d(embeddings) -> np.ndarray:
    """Project rows onto their first two principal components."""
    X = np.asarray(embeddings, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    comps = vt[:2]
    if comps.shape[0] < 2:
        comps = np.vstack([comps, np.zeros((2 - comps.shape[0], X.shape[1]))])
    return Xc @ comps.T
