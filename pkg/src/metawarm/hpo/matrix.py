"""Dataset x configuration ROC-AUC tables used as a surrogate benchmark."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..data import Split
from .space import ConfigPool

log = logging.getLogger(__name__)


@dataclass
class PerformanceMatrix:
    dataset_ids: list[str]
    config_ids: list[int]
    auc: np.ndarray
    excluded: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.auc = np.asarray(self.auc, dtype=np.float64)
        if self.auc.shape != (len(self.dataset_ids), len(self.config_ids)):
            raise ValueError("auc shape does not match dataset/config ids")
        if not np.all(np.isfinite(self.auc)):
            raise ValueError("performance matrix has missing entries")
        self._row = {d: i for i, d in enumerate(self.dataset_ids)}
        self._col = {c: j for j, c in enumerate(self.config_ids)}

    def row(self, dataset_id: str) -> np.ndarray:
        return self.auc[self._row[dataset_id]]

    def value(self, dataset_id: str, config_id: int) -> float:
        return float(self.auc[self._row[dataset_id], self._col[config_id]])

    def col_index(self, config_id: int) -> int:
        return self._col[config_id]

    def constant_rows(self) -> list[str]:
        """Datasets whose row max equals row min (unusable for min-max scaling)."""
        return [d for d, r in zip(self.dataset_ids, self.auc) if r.max() <= r.min()]

    def subset(self, dataset_ids: Sequence[str]) -> "PerformanceMatrix":
        idx = [self._row[d] for d in dataset_ids]
        return PerformanceMatrix(list(dataset_ids), list(self.config_ids), self.auc[idx])

    def best_config(self, dataset_id: str) -> int:
        """Argmax config id; ties go to the lowest config id."""
        r = self.row(dataset_id)
        best = np.flatnonzero(r == r.max())
        return min(self.config_ids[j] for j in best)


def save_matrix(m: PerformanceMatrix, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset_id"] + [str(c) for c in m.config_ids])
        for d, r in zip(m.dataset_ids, m.auc):
            w.writerow([d] + [repr(float(v)) for v in r])


def load_matrix(path: str | Path) -> PerformanceMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "dataset_id":
        raise ValueError(f"{path}: not a performance matrix (missing dataset_id header)")
    config_ids = [int(c) for c in rows[0][1:]]
    ids = [r[0] for r in rows[1:]]
    auc = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).reshape(len(ids), len(config_ids))
    return PerformanceMatrix(ids, config_ids, auc)


def _eval_row(evaluator, split, assignments, seed):
    try:
        return [evaluator(split, a, seed) for a in assignments], None
    except Exception as exc:  # evaluator failures only drop the dataset
        return None, f"{type(exc).__name__}: {exc}"


def build_matrix(splits: Sequence[Split], pool: ConfigPool,
                 evaluator: Callable[[Split, dict, int], float], seed: int = 0,
                 jobs: int = 1) -> PerformanceMatrix:
    """Evaluate every configuration on every split.

    A dataset whose evaluation raises is excluded (reason kept in
    ``excluded``) and logged; constant rows stay but are reported by
    ``constant_rows``.
    """
    assignments = [c.assignments for c in pool.configs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_eval_row, [evaluator] * len(splits), splits,
                                  [assignments] * len(splits), [seed] * len(splits)))
    else:
        results = [_eval_row(evaluator, s, assignments, seed) for s in splits]
    ids, rows, excluded = [], [], {}
    for split, (row, err) in zip(splits, results):
        if row is None:
            log.warning("excluding %s from the matrix: %s", split.id, err)
            excluded[split.id] = err
            continue
        ids.append(split.id)
        rows.append(row)
    m = PerformanceMatrix(ids, pool.ids, np.array(rows).reshape(len(ids), len(pool)), excluded)
    for d in m.constant_rows():
        log.warning("%s has a constant matrix row and will be skipped by ADTM", d)
    return m
