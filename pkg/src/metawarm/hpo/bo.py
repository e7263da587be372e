"""Warm-started Bayesian optimisation against a precomputed performance matrix."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .matrix import PerformanceMatrix
from .space import ConfigPool
from .tpe import tpe_propose

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    config_id: int
    raw_auc: float
    incumbent_auc: float


@dataclass
class OptimizationTrace:
    dataset_id: str
    method: str
    fold: int
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def config_ids(self) -> list[int]:
        return [s.config_id for s in self.steps]

    @property
    def incumbents(self) -> np.ndarray:
        return np.array([s.incumbent_auc for s in self.steps])

    def records(self) -> list[dict]:
        return [{"dataset_id": self.dataset_id, "method": self.method, "fold": self.fold,
                 **asdict(s)} for s in self.steps]


def write_traces(traces: Iterable[OptimizationTrace], path: str | Path) -> None:
    with open(path, "w") as fh:
        for t in traces:
            for rec in t.records():
                fh.write(json.dumps(rec) + "\n")


def read_traces(path: str | Path) -> list[OptimizationTrace]:
    out: dict[tuple, OptimizationTrace] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        r = json.loads(line)
        key = (r["dataset_id"], r["method"], r["fold"])
        if key not in out:
            out[key] = OptimizationTrace(*key)
        out[key].steps.append(TraceStep(r["iteration"], r["config_id"], r["raw_auc"], r["incumbent_auc"]))
    for t in out.values():
        t.steps.sort(key=lambda s: s.iteration)
    return list(out.values())


def run_bo(dataset_id: str, matrix: PerformanceMatrix, pool: ConfigPool,
           warmstart: Sequence[int] = (), total_iters: int = 30, warm_iters: int = 10,
           seed: int = 0, method: str = "", fold: int = 0,
           gamma_quantile: float = 0.25, smoothing: float = 1.0) -> OptimizationTrace:
    """Evaluate ``total_iters`` distinct configs by table lookup.

    The first ``warm_iters`` come from ``warmstart`` in order; slots it
    cannot fill (including all of them for an empty list) are seeded
    uniform draws without replacement.  The rest are TPE proposals.
    """
    if not 0 <= warm_iters <= total_iters:
        raise ValueError("need 0 <= warm_iters <= total_iters")
    if total_iters > len(pool):
        raise ValueError(f"total_iters={total_iters} exceeds the pool size {len(pool)}")
    pool_ids = set(pool.ids)
    warm = list(dict.fromkeys(int(c) for c in warmstart))
    unknown = [c for c in warm if c not in pool_ids]
    if unknown:
        raise ValueError(f"warm-start configs not in the pool: {unknown}")
    if len(warm) > warm_iters:
        log.warning("warm-start list of %d truncated to %d", len(warm), warm_iters)
        warm = warm[:warm_iters]
    rng = np.random.default_rng(seed)
    random_order = [int(c) for c in rng.permutation(pool.ids)]
    trace = OptimizationTrace(dataset_id, method, fold)
    observed: list[tuple[int, float]] = []
    seen: set[int] = set()
    best = -np.inf
    for it in range(1, total_iters + 1):
        if it <= warm_iters and it <= len(warm):
            cid = warm[it - 1]
        elif it <= warm_iters or len(observed) < 2:
            cid = next(c for c in random_order if c not in seen)
        else:
            cid = tpe_propose(observed, pool, gamma_quantile, smoothing)
        auc = matrix.value(dataset_id, cid)
        best = max(best, auc)
        observed.append((cid, auc))
        seen.add(cid)
        trace.steps.append(TraceStep(it, cid, auc, best))
    return trace
