"""Cross-validated comparison of warm-start strategies on a performance matrix."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset, FewShotTask, FoldSplit, Split, holdout_split, make_folds, task_split
from .hpo.bo import OptimizationTrace, run_bo
from .hpo.matrix import PerformanceMatrix
from .hpo.space import ConfigPool
from .hpo.warmstart import knn_warmstart, rank_warmstart
from .metrics import dtm_trajectory

log = logging.getLogger(__name__)

STRATEGIES = ("encoder-knn", "rank", "random")


@dataclass
class Unit:
    """One optimisation target: a whole dataset or a few-shot task of one."""

    id: str
    parent_id: str
    split: Split

    @property
    def view(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows fed to the encoder: the validation part of the split."""
        return self.split.X_val, self.split.y_val


def dataset_units(datasets: Sequence[Dataset], val_fraction: float = 0.3, seed: int = 0) -> list[Unit]:
    return [Unit(d.id, d.id, holdout_split(d, val_fraction, seed)) for d in datasets]


def task_units(datasets: Sequence[Dataset], tasks: Sequence[FewShotTask]) -> list[Unit]:
    by_id = {d.id: d for d in datasets}
    out = []
    for t in tasks:
        if t.parent_id not in by_id:
            raise KeyError(f"task {t.task_id} refers to unknown dataset {t.parent_id}")
        out.append(Unit(t.task_id, t.parent_id, task_split(by_id[t.parent_id], t)))
    return out


def unit_folds(parent_of: Mapping[str, str], k: int, seed: int) -> list[FoldSplit]:
    """Folds over parent datasets, expanded so all units of a parent share a side.

    ``parent_of`` maps unit id to parent dataset id, in unit order.
    """
    parents = sorted(set(parent_of.values()))
    out = []
    for f in make_folds(parents, k, seed):
        test = set(f.test_ids)
        out.append(FoldSplit(
            f.fold_index,
            tuple(u for u, p in parent_of.items() if p not in test),
            tuple(u for u, p in parent_of.items() if p in test),
        ))
    return out


def warmstart_list(strategy: str, test_id: str, train_ids: Sequence[str], matrix: PerformanceMatrix,
                   embeddings: Mapping[str, np.ndarray] | None, k: int) -> list[int]:
    if strategy == "random":
        return []
    train_matrix = matrix.subset(train_ids)
    if strategy == "rank":
        return rank_warmstart(train_matrix, k)
    if strategy == "encoder-knn":
        if embeddings is None:
            raise ValueError("encoder-knn needs dataset embeddings")
        missing = [d for d in [test_id, *train_ids] if d not in embeddings]
        if missing:
            raise KeyError(f"no embedding for {missing[0]}")
        # small corpora can have fewer than k training datasets per fold
        k_eff = min(k, len(train_ids))
        return knn_warmstart(embeddings[test_id], {d: embeddings[d] for d in train_ids}, train_matrix, k_eff)
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


def _run_one(args) -> OptimizationTrace:
    dataset_id, matrix, pool, warm, kw = args
    return run_bo(dataset_id, matrix, pool, warm, **kw)


def run_experiment(matrix: PerformanceMatrix, pool: ConfigPool, folds: Sequence[FoldSplit],
                   strategies: Sequence[str] = STRATEGIES,
                   embeddings: Mapping[str, np.ndarray] | None = None,
                   total_iters: int = 30, warm_iters: int = 10, k: int = 10, seed: int = 0,
                   gamma_quantile: float = 0.25, smoothing: float = 1.0,
                   jobs: int = 1) -> list[OptimizationTrace]:
    """Traces for every (test dataset, fold, strategy).

    Datasets with a constant matrix row are skipped as optimisation targets
    (ADTM cannot scale them) but still serve as warm-start sources.  All
    strategies share the run seed of a (dataset, fold) pair.
    """
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
    constant = set(matrix.constant_rows())
    present = set(matrix.dataset_ids)
    jobs_list = []
    for fold in folds:
        train_ids = [d for d in fold.train_ids if d in present]
        for i, test_id in enumerate(fold.test_ids):
            if test_id not in present:
                log.warning("fold %d: %s has no matrix row, skipped", fold.fold_index, test_id)
                continue
            if test_id in constant:
                log.warning("fold %d: %s has a constant matrix row, skipped", fold.fold_index, test_id)
                continue
            run_seed = seed * 1_000_003 + fold.fold_index * 10_007 + i
            for s in strategies:
                warm = warmstart_list(s, test_id, train_ids, matrix, embeddings, k)
                kw = dict(total_iters=total_iters, warm_iters=warm_iters, seed=run_seed, method=s,
                          fold=fold.fold_index, gamma_quantile=gamma_quantile, smoothing=smoothing)
                jobs_list.append((test_id, matrix, pool, warm, kw))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_one, jobs_list))
    return [_run_one(a) for a in jobs_list]


def dtm_table(traces: Sequence[OptimizationTrace], matrix: PerformanceMatrix,
              iteration: int | None = None) -> tuple[list[str], list[tuple[str, int]], np.ndarray]:
    """Methods x (dataset, fold) blocks of DTM at ``iteration`` (default: last)."""
    methods = sorted({t.method for t in traces})
    blocks = sorted({(t.dataset_id, t.fold) for t in traces})
    cell = {(t.method, t.dataset_id, t.fold): dtm_trajectory(t, matrix) for t in traces}
    table = np.full((len(methods), len(blocks)), np.nan)
    for a, m in enumerate(methods):
        for b, (d, f) in enumerate(blocks):
            traj = cell.get((m, d, f))
            if traj is None:
                raise ValueError(f"method {m} has no trace for {d} in fold {f}")
            table[a, b] = traj[-1] if iteration is None else traj[iteration - 1]
    return methods, blocks, table


def write_embeddings(path: str | Path, ids: Sequence[str], parents: Sequence[str], emb: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit_id", "parent_id"] + [f"e{j}" for j in range(emb.shape[1])])
        for i, p, row in zip(ids, parents, emb):
            w.writerow([i, p] + [repr(float(v)) for v in row])


def read_embeddings(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["unit_id", "parent_id"]:
        raise ValueError(f"{path}: not an embeddings file")
    emb = {r[0]: np.array([float(v) for v in r[2:]]) for r in rows[1:]}
    parents = {r[0]: r[1] for r in rows[1:]}
    return emb, parents


__all__ = [
    "STRATEGIES", "Unit", "dataset_units", "task_units", "unit_folds", "warmstart_list",
    "run_experiment", "dtm_table", "write_embeddings", "read_embeddings",
]
