"""Loading, preprocessing and fragmenting of tabular binary-classification data."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_ROWS = 10_000
MAX_FEATURES = 20
TASK_TRAIN_PER_CLASS = 2
TASK_VAL_ROWS = 29
TASK_ROWS = 2 * TASK_TRAIN_PER_CLASS + TASK_VAL_ROWS  # 33

_MISSING = {"", "na", "nan", "null", "none", "?"}


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass
class Dataset:
    id: str
    features: np.ndarray
    target: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        if self.features.ndim != 2:
            raise DataError(f"{self.id}: features must be a 2-D matrix")
        if self.target.shape != (self.features.shape[0],):
            raise DataError(f"{self.id}: target length does not match row count")
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.features.shape[1])]

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def is_binary(self) -> bool:
        return bool(np.all((self.target == 0) | (self.target == 1)))

    def subset(self, rows=None, cols=None, id: str | None = None) -> "Dataset":
        rows = np.arange(self.n_rows) if rows is None else np.asarray(rows, dtype=np.intp)
        cols = np.arange(self.n_features) if cols is None else np.asarray(cols, dtype=np.intp)
        return Dataset(
            id or self.id,
            self.features[np.ix_(rows, cols)],
            self.target[rows],
            [self.feature_names[c] for c in cols],
        )


@dataclass(frozen=True)
class FewShotTask:
    parent_id: str
    task_id: str
    train_rows: tuple[int, ...]
    val_rows: tuple[int, ...]
    selected_features: tuple[int, ...]

    def to_json(self) -> str:
        return json.dumps({
            "parent_id": self.parent_id,
            "task_id": self.task_id,
            "train_rows": list(self.train_rows),
            "val_rows": list(self.val_rows),
            "selected_features": list(self.selected_features),
        })

    @classmethod
    def from_json(cls, line: str) -> "FewShotTask":
        d = json.loads(line)
        return cls(d["parent_id"], d["task_id"], tuple(d["train_rows"]),
                   tuple(d["val_rows"]), tuple(d["selected_features"]))


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


@dataclass
class Split:
    """Train/validation arrays handed to model evaluators."""
    id: str
    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray


# --------------------------------------------------------------------------
# csv io


def load_csv(path: str | Path, regression: bool = False) -> Dataset:
    """Read a headed CSV whose last column is the target.

    With ``regression=False`` the target must be 0/1.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 3:
        raise DataError(f"{path}: fewer than 2 rows")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise DataError(f"{path}: need at least one feature column and a target column")
    values = np.empty((len(body), len(header)))
    for r, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell.lower() in _MISSING:
                raise DataError(f"{path}: missing value at row {r}, column {header[c]!r}")
            try:
                values[r - 1, c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: cannot parse {cell!r} at row {r}, column {header[c]!r}"
                ) from None
            if not math.isfinite(values[r - 1, c]):
                raise DataError(f"{path}: missing value at row {r}, column {header[c]!r}")
    ds = Dataset(path.stem, values[:, :-1], values[:, -1], [h.strip() for h in header[:-1]])
    if not regression and not ds.is_binary():
        raise DataError(f"{path}: target column must contain only 0 and 1")
    return ds


def save_csv(ds: Dataset, path: str | Path, target_name: str = "target") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [target_name])
        for x, y in zip(ds.features, ds.target):
            w.writerow([repr(float(v)) for v in x] + [_fmt_target(y)])


def _fmt_target(y: float) -> str:
    return str(int(y)) if float(y).is_integer() else repr(float(y))


# --------------------------------------------------------------------------
# preprocessing


def regression_to_binary(ds: Dataset, seed: int) -> Dataset:
    """Label rows by ``target > mean`` and subsample the majority class to balance."""
    t = ds.target
    if np.all(t == t[0]):
        raise DataError(f"{ds.id}: constant target, no split possible")
    labels = (t > t.mean()).astype(np.float64)
    ones = np.flatnonzero(labels == 1)
    zeros = np.flatnonzero(labels == 0)
    rng = np.random.default_rng(seed)
    n = min(len(ones), len(zeros))
    if len(ones) > n:
        ones = rng.choice(ones, size=n, replace=False)
    if len(zeros) > n:
        zeros = rng.choice(zeros, size=n, replace=False)
    keep = np.sort(np.concatenate([ones, zeros]))
    return Dataset(ds.id, ds.features[keep], labels[keep], list(ds.feature_names))


def standardize(ds: Dataset) -> Dataset:
    """Zero-mean, unit population variance columns; constant columns become zeros."""
    X = ds.features
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    Z = np.zeros_like(X)
    ok = sd > 0
    Z[:, ok] = (X[:, ok] - mu[ok]) / sd[ok]
    return Dataset(ds.id, Z, ds.target.copy(), list(ds.feature_names))


def filter_eligible(ds: Dataset) -> bool:
    return ds.n_rows <= MAX_ROWS and ds.n_features <= MAX_FEATURES


def _quartile_bins(x: np.ndarray) -> np.ndarray:
    edges = np.unique(np.quantile(x, [0.25, 0.5, 0.75]))
    return np.searchsorted(edges, x, side="right")


def mutual_information(bins: np.ndarray, y: np.ndarray) -> float:
    """Plug-in mutual information (nats) between two discrete label vectors."""
    n = len(y)
    _, b = np.unique(bins, return_inverse=True)
    _, c = np.unique(y, return_inverse=True)
    joint = np.zeros((b.max() + 1, c.max() + 1))
    np.add.at(joint, (b, c), 1.0)
    joint /= n
    pb = joint.sum(axis=1, keepdims=True)
    pc = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (pb @ pc)[nz])))


def select_top_features(ds: Dataset, k: int = 10) -> list[int]:
    """Indices of the ``k`` features with highest binned MI against the target."""
    if ds.n_features < k:
        raise DataError(f"{ds.id}: need at least {k} features, have {ds.n_features}")
    scores = [mutual_information(_quartile_bins(ds.features[:, i]), ds.target)
              for i in range(ds.n_features)]
    # rounding keeps float noise from breaking exact ties
    order = sorted(range(ds.n_features), key=lambda i: (-round(scores[i], 12), i))
    return order[:k]


def generate_fewshot_tasks(ds: Dataset, seed: int, n_features: int = 10) -> list[FewShotTask]:
    """Cut a dataset into disjoint 33-row tasks (2+2 train rows, 29 validation rows).

    Rows are shuffled within each class.  The class receiving 15 of the 29
    validation rows alternates from task to task (class 1 first); a task falls
    back to the other assignment when the preferred one cannot be filled.
    """
    if ds.n_rows < TASK_ROWS:
        raise DataError(f"{ds.id}: need at least {TASK_ROWS} rows, have {ds.n_rows}")
    rng = np.random.default_rng(seed)
    pools = {c: list(rng.permutation(np.flatnonzero(ds.target == c))) for c in (0, 1)}
    if min(len(p) for p in pools.values()) < TASK_TRAIN_PER_CLASS:
        raise DataError(f"{ds.id}: fewer than {TASK_TRAIN_PER_CLASS} rows in a class")
    features = tuple(select_top_features(ds, min(n_features, ds.n_features)))
    big, small = (TASK_VAL_ROWS + 1) // 2, TASK_VAL_ROWS // 2
    tasks: list[FewShotTask] = []
    favoured = 1
    while True:
        made = False
        for fav in (favoured, 1 - favoured):
            need = {fav: TASK_TRAIN_PER_CLASS + big, 1 - fav: TASK_TRAIN_PER_CLASS + small}
            if all(len(pools[c]) >= need[c] for c in (0, 1)):
                train, val = [], []
                for c in (1, 0):
                    take = pools[c][:need[c]]
                    pools[c] = pools[c][need[c]:]
                    train += take[:TASK_TRAIN_PER_CLASS]
                    val += take[TASK_TRAIN_PER_CLASS:]
                tasks.append(FewShotTask(
                    ds.id, f"{ds.id}__t{len(tasks):04d}",
                    tuple(int(i) for i in sorted(train)),
                    tuple(int(i) for i in sorted(val)),
                    features,
                ))
                made = True
                break
        if not made:
            break
        favoured = 1 - favoured
    if not tasks:
        raise DataError(f"{ds.id}: class balance too skewed to form a {TASK_ROWS}-row task")
    return tasks


def task_split(ds: Dataset, task: FewShotTask) -> Split:
    cols = list(task.selected_features)
    tr, va = list(task.train_rows), list(task.val_rows)
    return Split(task.task_id, ds.features[np.ix_(tr, cols)], ds.target[tr],
                 ds.features[np.ix_(va, cols)], ds.target[va])


def task_view(ds: Dataset, task: FewShotTask) -> Dataset:
    """The validation rows of a task restricted to its selected features."""
    return ds.subset(task.val_rows, task.selected_features, id=task.task_id)


def holdout_split(ds: Dataset, val_fraction: float, seed: int) -> Split:
    """Stratified train/validation split with at least one row per class on each side."""
    rng = np.random.default_rng(seed)
    train, val = [], []
    for c in (0, 1):
        idx = rng.permutation(np.flatnonzero(ds.target == c))
        if len(idx) < 2:
            raise DataError(f"{ds.id}: class {c} has fewer than 2 rows")
        n_val = min(max(1, int(round(val_fraction * len(idx)))), len(idx) - 1)
        val += list(idx[:n_val])
        train += list(idx[n_val:])
    train, val = np.sort(train), np.sort(val)
    return Split(ds.id, ds.features[train], ds.target[train], ds.features[val], ds.target[val])


def make_folds(ids: Sequence[str], k: int, seed: int) -> list[FoldSplit]:
    if k < 2:
        raise DataError("need k >= 2 folds")
    if len(ids) < k:
        raise DataError(f"cannot make {k} folds from {len(ids)} datasets")
    order = [ids[i] for i in np.random.default_rng(seed).permutation(len(ids))]
    blocks = np.array_split(np.arange(len(order)), k)
    folds = []
    for f, block in enumerate(blocks):
        test = [order[i] for i in block]
        test_set = set(test)
        folds.append(FoldSplit(f, tuple(i for i in order if i not in test_set), tuple(test)))
    return folds


def write_tasks(tasks: Iterable[FewShotTask], path: str | Path) -> None:
    Path(path).write_text("".join(t.to_json() + "\n" for t in tasks))


def read_tasks(path: str | Path) -> list[FewShotTask]:
    return [FewShotTask.from_json(line) for line in Path(path).read_text().splitlines() if line.strip()]
