"""Gaussian-mixture binary classification corpora with tunable cross-dataset similarity."""
from __future__ import annotations

import numpy as np

from .data import Dataset


def make_dataset(id: str, rng: np.random.Generator, n_rows: int, n_features: int,
                 level: float, spread: float, effect: float,
                 informative: float = 0.5, jitter: float = 0.3) -> Dataset:
    """One balanced two-component Gaussian mixture.

    ``level`` and ``spread`` set the dataset-wide location and scale of every
    column, ``effect`` the distance between the two class means.
    """
    y = np.zeros(n_rows)
    y[: n_rows // 2] = 1.0
    y = rng.permutation(y)
    direction = rng.normal(size=n_features)
    n_inf = max(1, int(round(informative * n_features)))
    direction[rng.permutation(n_features)[n_inf:]] = 0.0
    direction /= np.linalg.norm(direction)
    loc = level + jitter * rng.normal(size=n_features)
    X = loc + spread * rng.normal(size=(n_rows, n_features))
    X += np.outer(y - 0.5, effect * spread * direction)
    return Dataset(id, X, y, [f"f{i}" for i in range(n_features)])


def make_corpus(n_datasets: int, seed: int, n_rows: tuple[int, int] = (80, 200),
                n_features: tuple[int, int] = (3, 10), separation: float = 3.0,
                similarity: float = 0.0, prefix: str = "syn") -> list[Dataset]:
    """A list of datasets whose per-dataset parameters are blended with a shared centre.

    ``similarity=0`` draws every dataset independently; ``similarity=1``
    gives all datasets the same location, scale and class separation.
    """
    if not 0.0 <= similarity <= 1.0:
        raise ValueError("similarity must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    shared = (rng.normal(0.0, separation), np.log(rng.uniform(0.5, 2.0)), rng.uniform(0.5, 3.0))
    out = []
    for d in range(n_datasets):
        own = (rng.normal(0.0, separation), np.log(rng.uniform(0.5, 2.0)), rng.uniform(0.5, 3.0))
        level, log_spread, effect = (similarity * s + (1 - similarity) * o for s, o in zip(shared, own))
        out.append(make_dataset(
            f"{prefix}{d:03d}", rng,
            int(rng.integers(n_rows[0], n_rows[1] + 1)),
            int(rng.integers(n_features[0], n_features[1] + 1)),
            level, float(np.exp(log_spread)), effect,
            informative=float(rng.uniform(0.2, 1.0)),
        ))
    return out
