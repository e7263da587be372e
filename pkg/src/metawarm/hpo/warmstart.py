"""Warm-start lists: nearest-dataset best configurations and strict-win ranking."""
from __future__ import annotations

import logging
from typing import Mapping

import numpy as np

from .matrix import PerformanceMatrix

log = logging.getLogger(__name__)


def knn_warmstart(test_embedding, train_embeddings: Mapping[str, np.ndarray],
                  matrix: PerformanceMatrix, k: int = 10) -> list[int]:
    """Best configs of the ``k`` nearest training datasets (L2), nearest first.

    A config already taken is skipped and the slot is filled from the next
    nearest dataset, so the list holds distinct configs.
    """
    if len(train_embeddings) < k:
        raise ValueError(f"need at least {k} training embeddings, have {len(train_embeddings)}")
    q = np.asarray(test_embedding, dtype=np.float64)
    ids = sorted(train_embeddings)
    dist = {}
    for d in ids:
        e = np.asarray(train_embeddings[d], dtype=np.float64)
        if e.shape != q.shape:
            raise ValueError(f"embedding of {d} has shape {e.shape}, expected {q.shape}")
        dist[d] = float(np.linalg.norm(e - q))
    out: list[int] = []
    for d in sorted(ids, key=lambda d: (dist[d], d)):
        c = matrix.best_config(d)
        if c not in out:
            out.append(c)
        if len(out) == k:
            break
    if len(out) < k:
        log.info("only %d distinct warm-start configs among %d datasets", len(out), len(ids))
    return out


def strict_win_counts(matrix: PerformanceMatrix) -> dict[int, int]:
    """Datasets on which each config is the unique row maximum."""
    counts: dict[int, int] = {}
    for r in matrix.auc:
        best = np.flatnonzero(r == r.max())
        if len(best) == 1:
            c = matrix.config_ids[best[0]]
            counts[c] = counts.get(c, 0) + 1
    return counts


def rank_warmstart(matrix: PerformanceMatrix, k: int = 10) -> list[int]:
    """Configs ordered by strict-win count, backfilled by mean AUC."""
    if matrix.auc.size == 0:
        raise ValueError("rank_warmstart needs a non-empty matrix")
    counts = strict_win_counts(matrix)
    out = sorted(counts, key=lambda c: (-counts[c], c))[:k]
    if len(out) < k:
        means = matrix.auc.mean(axis=0)
        by_mean = sorted(range(len(matrix.config_ids)),
                         key=lambda j: (-means[j], matrix.config_ids[j]))
        for j in by_mean:
            c = matrix.config_ids[j]
            if c not in out:
                out.append(c)
            if len(out) == k:
                break
    return out
