"""Model evaluators mapping (train/validation split, configuration) to validation ROC-AUC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from ..data import Split
from . import _kernels

MAX_PROX_ITER = 5000
REG_LAMBDA = 1.0
HESS_FLOOR = 1e-16


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _check_train(split: Split) -> None:
    if len(np.unique(split.y_train)) < 2:
        raise ValueError(f"{split.id}: training split has a single class")


# --------------------------------------------------------------------------
# elastic-net logistic regression


def penalty_mix(config: dict) -> float | None:
    """L1 share of the penalty, or None for an unpenalised fit."""
    penalty = config.get("penalty", "l2")
    if penalty is None:
        return None
    if penalty == "l1":
        return 1.0
    if penalty == "l2":
        return 0.0
    if penalty == "elasticnet":
        return float(config.get("l1_ratio", 0.5))
    raise ValueError(f"unknown penalty {penalty!r}")


def fit_logistic(X, y, C: float, l1_share: float | None, tol: float = 1e-4,
                 max_iter: int = MAX_PROX_ITER, bias_scale: float = 1.0,
                 penalize_bias: bool = False) -> np.ndarray:
    """Accelerated proximal gradient on mean log-loss + (1/C)(a|w|_1 + (1-a)|w|^2/2).

    The last coefficient multiplies a constant column of value ``bias_scale``.
    Stops when no coefficient moves by more than ``tol * max(1, |w|_inf)``.
    """
    n, d = X.shape
    Xb = np.hstack([X, np.full((n, 1), bias_scale)])
    mask = np.ones(d + 1)
    if not penalize_bias:
        mask[-1] = 0.0
    if l1_share is None:
        lam1 = lam2 = 0.0
    else:
        lam1, lam2 = l1_share / C, (1.0 - l1_share) / C
    lipschitz = 0.25 * np.linalg.norm(Xb, 2) ** 2 / n + lam2
    step = 1.0 / lipschitz
    thresh = step * lam1 * mask
    w = np.zeros(d + 1)
    z = w.copy()
    t = 1.0
    for _ in range(max_iter):
        grad = Xb.T @ (expit(Xb @ z) - y) / n + lam2 * mask * z
        u = z - step * grad
        w_new = np.sign(u) * np.maximum(np.abs(u) - thresh, 0.0)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = w_new + ((t - 1.0) / t_new) * (w_new - w)
        moved = np.max(np.abs(w_new - w))
        w, t = w_new, t_new
        if moved <= tol * max(1.0, np.max(np.abs(w))):
            break
    return w


def eval_elasticnet(split: Split, config: dict, seed: int = 0) -> float:
    """Validation AUC of a regularised logistic regression.

    Every solver shares the proximal-gradient trainer; liblinear configurations
    regularise the intercept column scaled by ``intercept_scaling``.
    """
    _check_train(split)
    liblinear = config.get("solver") == "liblinear"
    bias_scale = float(config.get("intercept_scaling", 1.0)) if liblinear else 1.0
    w = fit_logistic(split.X_train, split.y_train, float(config["C"]), penalty_mix(config),
                     tol=float(config.get("tol", 1e-4)), bias_scale=bias_scale,
                     penalize_bias=liblinear)
    scores = split.X_val @ w[:-1] + bias_scale * w[-1]
    return roc_auc(scores, split.y_val)


# --------------------------------------------------------------------------
# gradient boosting


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X, kernels=None) -> np.ndarray:
        k = kernels or _kernels.kernels
        return k.predict_tree(np.ascontiguousarray(X, dtype=np.float64), self.feature,
                              self.threshold, self.left, self.right, self.value)


def _n_sub(frac: float, n: int) -> int:
    return max(1, min(n, int(round(frac * n))))


def grow_tree(X, g, h, rows, max_depth: int, min_child_weight: float,
              features, colsample_bylevel: float, rng: np.random.Generator,
              reg_lambda: float = REG_LAMBDA, kernels=None) -> Tree:
    """Level-wise depth-limited regression tree on gradient statistics."""
    k = kernels or _kernels.kernels
    features = np.asarray(features, dtype=np.intp)
    feat, thr, left, right, value = [-1], [0.0], [-1], [-1], []
    G, H = float(g[rows].sum()), float(h[rows].sum())
    value.append(-G / (H + reg_lambda))
    frontier = [(0, np.asarray(rows, dtype=np.intp))]
    for _ in range(max_depth):
        if not frontier:
            break
        level = np.sort(rng.choice(features, _n_sub(colsample_bylevel, len(features)), replace=False))
        nxt = []
        for node, r in frontier:
            G, H = float(g[r].sum()), float(h[r].sum())
            f, t, _gain = k.best_split(X, g, h, r, level, G, H, min_child_weight, reg_lambda)
            if f < 0:
                continue
            go_left = X[r, f] < t
            feat[node], thr[node] = int(f), float(t)
            for child_rows, side in ((r[go_left], left), (r[~go_left], right)):
                cid = len(feat)
                side[node] = cid
                feat.append(-1)
                thr.append(0.0)
                left.append(-1)
                right.append(-1)
                Gc, Hc = float(g[child_rows].sum()), float(h[child_rows].sum())
                value.append(-Gc / (Hc + reg_lambda))
                nxt.append((cid, child_rows))
        frontier = nxt
    return Tree(np.asarray(feat, dtype=np.intp), np.asarray(thr), np.asarray(left, dtype=np.intp),
                np.asarray(right, dtype=np.intp), np.asarray(value))


def boost(X_train, y_train, X_val, config: dict, seed: int = 0, kernels=None) -> np.ndarray:
    """Run boosting on log-loss and return validation margins."""
    X_train = np.ascontiguousarray(X_train, dtype=np.float64)
    X_val = np.ascontiguousarray(X_val, dtype=np.float64)
    rng = np.random.default_rng(seed)
    n, d = X_train.shape
    n_est = int(config.get("n_estimators", 100))
    lr = float(config.get("learning_rate", 0.3))
    booster = config.get("booster", "gbtree")
    margin = np.zeros(n)
    val_margin = np.zeros(X_val.shape[0])
    if booster == "gblinear":
        w, b = np.zeros(d), 0.0
    for _ in range(n_est):
        p = expit(margin)
        g = p - y_train
        h = np.maximum(p * (1.0 - p), HESS_FLOOR)
        if booster == "gbtree":
            rows = np.sort(rng.choice(n, _n_sub(float(config.get("subsample", 1.0)), n), replace=False))
            cols = np.sort(rng.choice(d, _n_sub(float(config.get("colsample_bytree", 1.0)), d),
                                      replace=False))
            tree = grow_tree(X_train, g, h, rows, int(config.get("max_depth", 6)),
                             float(config.get("min_child_weight", 1.0)), cols,
                             float(config.get("colsample_bylevel", 1.0)), rng, kernels=kernels)
            margin += lr * tree.predict(X_train, kernels)
            val_margin += lr * tree.predict(X_val, kernels)
        elif booster == "gblinear":
            dw = -(X_train.T @ g + REG_LAMBDA * w) / (h @ (X_train * X_train) + REG_LAMBDA)
            db = -g.sum() / h.sum()
            w = w + lr * dw
            b = b + lr * db
            margin = X_train @ w + b
            val_margin = X_val @ w + b
        else:
            raise ValueError(f"unknown booster {booster!r}")
    return val_margin


def eval_gbt(split: Split, config: dict, seed: int = 0) -> float:
    """Validation AUC of the minimal gradient-boosting classifier."""
    _check_train(split)
    return roc_auc(boost(split.X_train, split.y_train, split.X_val, config, seed), split.y_val)


EVALUATORS = {"elasticnet": eval_elasticnet, "gbt": eval_gbt, "xgboost": eval_gbt}
