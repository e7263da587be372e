"""Command-line driver: prepare data, train encoders, build matrices, run and report.

Every stage reads and writes files under one output directory::

    prepared/            standardized CSVs, tasks.jsonl, provenance.json
    encoder/             manifest.json, tensor blobs, loss_history.csv
    embeddings.csv       one row per optimisation unit
    pool.json            sampled configurations
    matrix.csv           unit x config ROC-AUC
    traces.jsonl         BO traces for every strategy and fold
    report.json / report.txt / adtm_plot.csv / embeddings_pca.csv
"""
from __future__ import annotations

import argparse
import copy
import csv
import glob
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import encoders
from .data import (DataError, Dataset, filter_eligible, generate_fewshot_tasks, load_csv,
                   read_tasks, regression_to_binary, save_csv, standardize, write_tasks)
from .experiment import (STRATEGIES, dataset_units, dtm_table, read_embeddings, run_experiment,
                         task_units, unit_folds, write_embeddings)
from .hpo.bo import read_traces, write_traces
from .hpo.evaluators import EVALUATORS
from .hpo.matrix import build_matrix, load_matrix, save_matrix
from .hpo.space import SPACES, ConfigPool, sample_pool
from .metrics import adtm, aggregate_folds, friedman_test, nemenyi_cd, pca_2d, probe_encoder
from .synthetic import make_corpus

log = logging.getLogger("metawarm")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "output_dir": "metawarm-out",
    "jobs": 1,
    "data": {
        "paths": [],
        "synthetic": False,
        "regression": False,
        "fewshot": False,
        "val_fraction": 0.3,
        "n_features": 10,
    },
    "synth": {
        "n_datasets": 12,
        "n_rows_min": 80,
        "n_rows_max": 200,
        "n_features_min": 3,
        "n_features_max": 10,
        "separation": 3.0,
        "similarity": 0.0,
    },
    "encoder": {"name": "liltab", "train_paths": [], "liltab": {}, "d2v": {}},
    "model": {"name": "elasticnet", "pool_size": 100, "matrix_file": None, "pool_file": None},
    "hpo": {
        "folds": 5,
        "total_iters": 30,
        "warm_iters": 10,
        "k": 10,
        "strategies": list(STRATEGIES),
        "gamma_quantile": 0.25,
        "smoothing": 1.0,
    },
    "report": {
        "alpha": 0.05,
        "blocks": "dataset-fold",
        "probe": True,
        "probe_pairs": 200,
        "probe_repetitions": 15,
        "probe_views_per_dataset": 20,
    },
}

# free-form maps validated later by the encoder module
_OPEN_KEYS = {"encoder.liltab", "encoder.d2v"}


class ConfigError(Exception):
    pass


class MissingArtifact(Exception):
    pass


# --------------------------------------------------------------------------
# configuration


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(cfg: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node = cfg
    for i, part in enumerate(parts[:-1]):
        prefix = ".".join(parts[: i + 1])
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key {key!r}")
        node = node[part]
        if prefix in _OPEN_KEYS:
            node[".".join(parts[i + 1:])] = value
            return
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {key!r}")
    node[parts[-1]] = value


def _flatten(doc: dict, prefix: str = ""):
    """Yield (dotted key, value) leaves; open maps are expanded one level."""
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if key in _OPEN_KEYS:
            if not isinstance(v, dict):
                raise ConfigError(f"{key} must be an object")
            for kk, vv in v.items():
                yield f"{key}.{kk}", vv
        elif isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def load_config(path: str | None, overrides: Sequence[str] = (), env=os.environ) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        p = Path(path)
        if not p.exists():
            raise MissingArtifact(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{p}: top level must be an object")
        # nested sections and dotted keys may be mixed freely
        for k, v in _flatten(doc):
            set_dotted(cfg, k, v)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        set_dotted(cfg, k.strip(), _parse_value(v))
    if env.get("METAWARM_SEED"):
        try:
            cfg["seed"] = int(env["METAWARM_SEED"])
        except ValueError as exc:
            raise ConfigError("METAWARM_SEED must be an integer") from exc
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    h = cfg["hpo"]
    if not 0 <= h["warm_iters"] <= h["total_iters"]:
        raise ConfigError("need 0 <= hpo.warm_iters <= hpo.total_iters")
    if cfg["model"]["name"] != "matrix-file" and h["total_iters"] > cfg["model"]["pool_size"]:
        raise ConfigError("hpo.total_iters exceeds model.pool_size")
    if cfg["model"]["name"] not in (*EVALUATORS, "matrix-file"):
        raise ConfigError(f"model.name must be one of {sorted(EVALUATORS) + ['matrix-file']}")
    if cfg["encoder"]["name"] not in (*encoders.ENCODER_NAMES, "none"):
        raise ConfigError(f"encoder.name must be one of {list(encoders.ENCODER_NAMES) + ['none']}")
    bad = [s for s in h["strategies"] if s not in STRATEGIES]
    if bad:
        raise ConfigError(f"unknown strategies {bad}; choose from {list(STRATEGIES)}")
    if cfg["report"]["alpha"] not in (0.05, 0.10):
        raise ConfigError("report.alpha must be 0.05 or 0.10")
    if cfg["report"]["blocks"] not in ("dataset-fold", "per-fold"):
        raise ConfigError("report.blocks must be 'dataset-fold' or 'per-fold'")
    if h["folds"] < 2:
        raise ConfigError("hpo.folds must be at least 2")


# --------------------------------------------------------------------------
# artifact helpers


def _out(cfg) -> Path:
    return Path(cfg["output_dir"])


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise MissingArtifact(f"missing {what}: {path}")
    return path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def load_prepared(cfg) -> list[Dataset]:
    d = _require(_out(cfg) / "prepared", "prepared datasets (run `metawarm prepare`)")
    files = sorted(d.glob("*.csv"))
    if not files:
        raise MissingArtifact(f"missing prepared datasets: no CSV files in {d}")
    return [load_csv(f) for f in files]


def load_units(cfg):
    datasets = load_prepared(cfg)
    if cfg["data"]["fewshot"]:
        tasks = read_tasks(_require(_out(cfg) / "prepared" / "tasks.jsonl", "task manifest"))
        return task_units(datasets, tasks)
    return dataset_units(datasets, cfg["data"]["val_fraction"], cfg["seed"])


def _expand_paths(patterns: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for pat in patterns:
        p = Path(pat)
        if p.is_dir():
            hits = sorted(p.glob("*.csv"))
        elif any(ch in pat for ch in "*?["):
            hits = sorted(Path(h) for h in glob.glob(pat))
        else:
            hits = [p] if p.exists() else []
        if not hits:
            raise MissingArtifact(f"input path not found: {pat}")
        files += hits
    return list(dict.fromkeys(files))


def write_synthetic(cfg, directory: Path) -> list[Path]:
    s = cfg["synth"]
    corpus = make_corpus(s["n_datasets"], cfg["seed"], (s["n_rows_min"], s["n_rows_max"]),
                         (s["n_features_min"], s["n_features_max"]), s["separation"], s["similarity"])
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for ds in corpus:
        p = directory / f"{ds.id}.csv"
        save_csv(ds, p)
        paths.append(p)
    return paths


# --------------------------------------------------------------------------
# commands


def cmd_synth(cfg, args) -> None:
    target = Path(args.dest) if getattr(args, "dest", None) else _out(cfg) / "raw"
    paths = write_synthetic(cfg, target)
    print(f"wrote {len(paths)} datasets to {target}")


def cmd_prepare(cfg, args=None) -> None:
    out = _out(cfg) / "prepared"
    dcfg = cfg["data"]
    if dcfg["synthetic"] and not dcfg["paths"]:
        files = write_synthetic(cfg, _out(cfg) / "raw")
    else:
        if not dcfg["paths"]:
            raise ConfigError("data.paths is empty (or set data.synthetic=true)")
        files = _expand_paths(dcfg["paths"])
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("*.csv"):
        old.unlink()
    kept, filtered, rejected, all_tasks = [], [], [], []
    for f in files:
        try:
            ds = load_csv(f, regression=dcfg["regression"])
            if dcfg["regression"]:
                ds = regression_to_binary(ds, cfg["seed"])
        except DataError as exc:
            log.warning("rejecting %s: %s", f, exc)
            rejected.append({"path": str(f), "reason": str(exc)})
            continue
        if not filter_eligible(ds):
            filtered.append({"id": ds.id, "n_rows": ds.n_rows, "n_features": ds.n_features})
            continue
        ds = standardize(ds)
        if dcfg["fewshot"]:
            try:
                all_tasks += generate_fewshot_tasks(ds, cfg["seed"], dcfg["n_features"])
            except DataError as exc:
                rejected.append({"path": str(f), "reason": str(exc)})
                continue
        save_csv(ds, out / f"{ds.id}.csv")
        kept.append(ds.id)
    if not kept:
        raise ConfigError("no dataset survived preparation")
    if dcfg["fewshot"]:
        write_tasks(all_tasks, out / "tasks.jsonl")
    _write_json(out / "provenance.json", {
        "seed": cfg["seed"], "n_inputs": len(files), "kept": kept, "filtered": filtered,
        "n_filtered": len(filtered), "rejected": rejected, "fewshot": dcfg["fewshot"],
        "n_tasks": len(all_tasks), "regression": dcfg["regression"],
    })
    print(f"prepared {len(kept)} datasets ({len(filtered)} filtered, {len(rejected)} rejected)")


def _encoder_settings(cfg) -> tuple[str, dict]:
    name = cfg["encoder"]["name"]
    if name == "none":
        raise ConfigError("encoder.name is 'none'; nothing to train or embed")
    settings = dict(cfg["encoder"][name])
    settings.setdefault("seed", cfg["seed"])
    return name, settings


def cmd_train_encoder(cfg, args=None) -> None:
    name, settings = _encoder_settings(cfg)
    try:
        train, arch = encoders.split_settings(name, settings)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["encoder"]["train_paths"]:
        datasets = [standardize(load_csv(f)) for f in _expand_paths(cfg["encoder"]["train_paths"])]
    else:
        datasets = load_prepared(cfg)
    enc, result = encoders.train_encoder(
        name, datasets, train, arch,
        log=lambda e, v: log.info("epoch %d loss %.6g", e, v))
    out = _out(cfg) / "encoder"
    if out.exists():
        for old in out.iterdir():
            old.unlink()
    enc.save(out, {"train": {k: getattr(train, k) for k in encoders.TRAIN_KEYS},
                   "best_epoch": result.best_epoch, "stopped_early": result.stopped_early})
    with open(out / "loss_history.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for e, v in enumerate(result.history):
            w.writerow([e, repr(float(v))])
    print(f"trained {name} encoder for {len(result.history)} epochs -> {out}")


def cmd_embed(cfg, args=None) -> None:
    enc = encoders.load_encoder(_require(_out(cfg) / "encoder", "encoder (run `metawarm train-encoder`)"))
    units = load_units(cfg)
    emb = enc.embed_many([u.view for u in units])
    path = _out(cfg) / "embeddings.csv"
    write_embeddings(path, [u.id for u in units], [u.parent_id for u in units], emb)
    print(f"embedded {len(units)} units -> {path}")


def cmd_build_matrix(cfg, args=None) -> None:
    m = cfg["model"]
    out = _out(cfg)
    out.mkdir(parents=True, exist_ok=True)
    if m["name"] == "matrix-file":
        if not m["matrix_file"] or not m["pool_file"]:
            raise ConfigError("model.matrix_file and model.pool_file are required for matrix-file")
        matrix = load_matrix(_require(Path(m["matrix_file"]), "matrix file"))
        pool = ConfigPool.load(_require(Path(m["pool_file"]), "pool file"))
        if matrix.config_ids != pool.ids:
            raise ConfigError("matrix columns do not match the pool's config ids")
    else:
        pool = sample_pool(SPACES[m["name"]](), m["pool_size"], cfg["seed"])
        units = load_units(cfg)
        matrix = build_matrix([u.split for u in units], pool, EVALUATORS[m["name"]],
                              seed=cfg["seed"], jobs=cfg["jobs"])
    if cfg["hpo"]["total_iters"] > len(pool):
        raise ConfigError("hpo.total_iters exceeds the pool size")
    pool.save(out / "pool.json")
    save_matrix(matrix, out / "matrix.csv")
    print(f"matrix {len(matrix.dataset_ids)}x{len(matrix.config_ids)} -> {out / 'matrix.csv'}")


def _parents(cfg, ids: Sequence[str]) -> dict[str, str]:
    tasks_path = _out(cfg) / "prepared" / "tasks.jsonl"
    if cfg["data"]["fewshot"] and tasks_path.exists():
        by_task = {t.task_id: t.parent_id for t in read_tasks(tasks_path)}
        return {i: by_task.get(i, i) for i in ids}
    return {i: i for i in ids}


def cmd_run(cfg, args=None) -> None:
    out = _out(cfg)
    h = cfg["hpo"]
    embeddings = None
    if "encoder-knn" in h["strategies"]:
        if cfg["encoder"]["name"] == "none":
            raise ConfigError("strategy encoder-knn needs an encoder, but encoder.name is 'none'")
        embeddings, _ = read_embeddings(_require(out / "embeddings.csv", "embeddings file (run `metawarm embed`)"))
    matrix = load_matrix(_require(out / "matrix.csv", "matrix file (run `metawarm build-matrix`)"))
    pool = ConfigPool.load(_require(out / "pool.json", "pool file (run `metawarm build-matrix`)"))
    folds = unit_folds(_parents(cfg, matrix.dataset_ids), h["folds"], cfg["seed"])
    traces = run_experiment(matrix, pool, folds, h["strategies"], embeddings,
                            h["total_iters"], h["warm_iters"], h["k"], cfg["seed"],
                            h["gamma_quantile"], h["smoothing"], cfg["jobs"])
    write_traces(traces, out / "traces.jsonl")
    print(f"{len(traces)} traces -> {out / 'traces.jsonl'}")


def _friedman_block(table: np.ndarray, methods, alpha) -> dict:
    k, n = table.shape
    if k < 2 or n < 2:
        return {"statistic": None, "mean_ranks": None, "cd": None, "n_blocks": n}
    stat, ranks = friedman_test(table, lower_is_better=True)
    cd = nemenyi_cd(k, n, alpha) if k <= 10 else None
    return {"statistic": stat, "mean_ranks": dict(zip(methods, ranks.tolist())), "cd": cd, "n_blocks": n}


def cmd_report(cfg, args=None) -> None:
    out = _out(cfg)
    matrix = load_matrix(_require(out / "matrix.csv", "matrix file"))
    traces = read_traces(_require(out / "traces.jsonl", "traces file (run `metawarm run`)"))
    if not traces:
        raise MissingArtifact(f"no traces in {out / 'traces.jsonl'}")
    alpha = cfg["report"]["alpha"]
    methods = sorted({t.method for t in traces})
    doc: dict[str, Any] = {"methods": {}, "total_iters": cfg["hpo"]["total_iters"]}
    plot_rows = []
    for m in methods:
        rep = adtm([t for t in traces if t.method == m], matrix, m)
        entry = {"adtm": rep.mean.tolist(), "n_iterations": len(rep.mean),
                 "n_traces": len(rep.per_dataset),
                 "per_fold": {str(f): v.tolist() for f, v in rep.per_fold.items()}}
        if len(rep.per_fold) >= 2:
            mean, half = aggregate_folds(list(rep.per_fold.values()))
            entry["fold_mean"], entry["fold_ci_half_width"] = mean.tolist(), half.tolist()
        else:
            mean, half = rep.mean, np.zeros_like(rep.mean)
        for it, (a, b) in enumerate(zip(mean, half), start=1):
            plot_rows.append([it, m, repr(float(a)), repr(float(b))])
        doc["methods"][m] = entry
    tmethods, blocks, table = dtm_table(traces, matrix)
    if cfg["report"]["blocks"] == "dataset-fold":
        doc["friedman"] = _friedman_block(table, tmethods, alpha)
    else:
        doc["friedman"] = {}
        for f in sorted({b[1] for b in blocks}):
            cols = [j for j, b in enumerate(blocks) if b[1] == f]
            doc["friedman"][str(f)] = _friedman_block(table[:, cols], tmethods, alpha)
    doc["alpha"] = alpha
    with open(out / "adtm_plot.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "method", "mean", "ci_half_width"])
        w.writerows(plot_rows)
    emb_path = out / "embeddings.csv"
    if emb_path.exists():
        emb, parents = read_embeddings(emb_path)
        ids = list(emb)
        proj = pca_2d(np.stack([emb[i] for i in ids]))
        with open(out / "embeddings_pca.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["unit_id", "parent_id", "pc1", "pc2"])
            for i, (a, b) in zip(ids, proj):
                w.writerow([i, parents[i], repr(float(a)), repr(float(b))])
    enc_dir = out / "encoder"
    if cfg["report"]["probe"] and enc_dir.exists() and (out / "prepared").exists():
        enc = encoders.load_encoder(enc_dir)
        datasets = load_prepared(cfg)
        if len(datasets) >= 2:
            r = cfg["report"]
            pr = probe_encoder(enc.embed_many, datasets, r["probe_pairs"],
                               r["probe_views_per_dataset"], r["probe_repetitions"], cfg["seed"],
                               encoders.encoder_gamma(enc))
            doc["probe"] = vars(pr)
    _write_json(out / "report.json", doc)
    (out / "report.txt").write_text(render_report(doc))
    print((out / "report.txt").read_text(), end="")


def render_report(doc: dict) -> str:
    lines = []
    iters = max(e["n_iterations"] for e in doc["methods"].values())
    marks = [i for i in (1, 5, 10, 20, 30) if i <= iters]
    if iters not in marks:
        marks.append(iters)
    header = f"{'method':<14}{'traces':>8}" + "".join(f"{'it' + str(i):>10}" for i in marks)
    lines += ["ADTM (lower is better)", header, "-" * len(header)]
    for m, e in doc["methods"].items():
        lines.append(f"{m:<14}{e['n_traces']:>8}" + "".join(f"{e['adtm'][i - 1]:>10.4f}" for i in marks))
    lines.append("")
    fr = doc["friedman"]
    blocks = [("all", fr)] if "statistic" in fr else list(fr.items())
    for label, b in blocks:
        if b["statistic"] is None:
            lines.append(f"Friedman [{label}]: not enough methods or blocks")
            continue
        lines.append(f"Friedman [{label}]: chi2 = {b['statistic']:.4f} over {b['n_blocks']} blocks; "
                     f"Nemenyi CD (alpha={doc['alpha']}) = {b['cd']:.4f}")
        for m, r in b["mean_ranks"].items():
            lines.append(f"  {m:<14}mean rank {r:.3f}")
    if "probe" in doc:
        p = doc["probe"]
        lines += ["", f"pair accuracy {p['accuracy_mean']:.4f} +/- {p['accuracy_std']:.4f}; "
                      f"CH {p['ch_mean']:.3f} +/- {p['ch_std']:.3f} ({p['repetitions']} repetitions)"]
    return "\n".join(lines) + "\n"


def cmd_pipeline(cfg, args=None) -> None:
    enc = cfg["encoder"]["name"]
    if "encoder-knn" in cfg["hpo"]["strategies"] and enc == "none":
        raise ConfigError("strategy encoder-knn needs an encoder, but encoder.name is 'none'")
    cmd_prepare(cfg)
    if enc != "none":
        cmd_train_encoder(cfg)
        cmd_embed(cfg)
    cmd_build_matrix(cfg)
    cmd_run(cfg)
    cmd_report(cfg)


COMMANDS = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "train-encoder": cmd_train_encoder,
    "embed": cmd_embed,
    "build-matrix": cmd_build_matrix,
    "run": cmd_run,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metawarm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a dotted config key (value parsed as JSON when possible)")
        p.add_argument("--out", help="output directory (config key output_dir)")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("train-encoder", "embed", "pipeline", "report"):
            p.add_argument("--encoder", choices=[*encoders.ENCODER_NAMES, "none"])
        if name in ("train-encoder", "pipeline"):
            for key in ("num_epochs", "learning_rate", "weight_decay", "batch_size", "early_stopping_epochs"):
                p.add_argument("--" + key.replace("_", "-"), type=float if "rate" in key or "decay" in key else int,
                               dest=key)
        if name in ("run", "pipeline"):
            p.add_argument("--strategies", help="comma-separated subset of " + ",".join(STRATEGIES))
        if name == "synth":
            p.add_argument("--dest", help="directory for the CSV files (default OUT/raw)")
            p.add_argument("--n-datasets", type=int)
    return parser


def _apply_flags(cfg: dict, args) -> None:
    if args.out:
        cfg["output_dir"] = args.out
    if args.seed is not None and not os.environ.get("METAWARM_SEED"):
        cfg["seed"] = args.seed
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if getattr(args, "encoder", None):
        cfg["encoder"]["name"] = args.encoder
    name = cfg["encoder"]["name"]
    for key in ("num_epochs", "learning_rate", "weight_decay", "batch_size", "early_stopping_epochs"):
        v = getattr(args, key, None)
        if v is not None and name in encoders.ENCODER_NAMES:
            cfg["encoder"][name][key] = v
    if getattr(args, "strategies", None):
        cfg["hpo"]["strategies"] = [s.strip() for s in args.strategies.split(",") if s.strip()]
    if getattr(args, "n_datasets", None) is not None:
        cfg["synth"]["n_datasets"] = args.n_datasets
    validate(cfg)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.set)
        _apply_flags(cfg, args)
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingArtifact, FileNotFoundError) as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except FloatingPointError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
