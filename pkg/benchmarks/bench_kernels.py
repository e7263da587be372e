"""Time the compiled tree kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows 2000] [--features 10] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from metawarm.hpo import _kernels
from metawarm.hpo.evaluators import boost


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--features", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.rows, args.features))
    y = (X[:, 0] + 0.5 * rng.normal(size=args.rows) > 0).astype(float)
    g, h = rng.normal(size=args.rows), rng.uniform(0.05, 0.25, size=args.rows)
    rows = np.arange(args.rows, dtype=np.intp)
    feats = np.arange(args.features, dtype=np.intp)
    cfg = {"n_estimators": 30, "learning_rate": 0.3, "max_depth": 6, "min_child_weight": 2.0,
           "subsample": 0.8, "colsample_bytree": 0.8, "colsample_bylevel": 0.8}

    backends = ["python"] + (["compiled"] if _kernels.compiled_available() else [])
    print(f"active backend: {_kernels.BACKEND}; rows={args.rows} features={args.features}")
    results = {}
    for name in backends:
        k = _kernels.get_backend(name)
        split = min(timeit.repeat(lambda: k.best_split(X, g, h, rows, feats, float(g.sum()), float(h.sum()), 1.0, 1.0),
                                  number=10, repeat=args.repeat)) / 10
        fit = min(timeit.repeat(lambda: boost(X, y, X, cfg, 0, k), number=1, repeat=args.repeat))
        results[name] = (split, fit)
        print(f"{name:>9}: best_split {split * 1e3:8.3f} ms   boost(30 trees) {fit * 1e3:9.1f} ms")
    if len(results) == 2:
        (ps, pf), (cs, cf) = results["python"], results["compiled"]
        print(f"  speedup: best_split x{ps / cs:.1f}, boost x{pf / cf:.1f}")
    else:
        print("compiled kernels unavailable; build with `pip install --no-build-isolation -e .`")


if __name__ == "__main__":
    main()
