"""Dispatch between the two dataset encoders by name or saved manifest."""
from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path
from typing import Callable, Sequence

from . import d2v, liltab
from .data import Dataset
from .tensor import TrainConfig, TrainResult

ENCODER_NAMES = ("liltab", "d2v")
_ARCH = {"liltab": liltab.LiltabConfig, "d2v": d2v.D2VConfig}
_CLASS = {"liltab": liltab.LiltabEncoder, "d2v": d2v.D2VEncoder}
_TRAIN_DEFAULTS = {"liltab": liltab.default_train_config, "d2v": d2v.default_train_config}
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig))


def arch_keys(name: str) -> tuple[str, ...]:
    return tuple(f.name for f in fields(_ARCH[_check(name)]))


def _check(name: str) -> str:
    if name not in ENCODER_NAMES:
        raise ValueError(f"unknown encoder {name!r}; choose from {ENCODER_NAMES}")
    return name


def split_settings(name: str, settings: dict) -> tuple[TrainConfig, object]:
    """Separate a flat settings map into training and architecture configs."""
    unknown = set(settings) - set(TRAIN_KEYS) - set(arch_keys(name))
    if unknown:
        raise ValueError(f"unknown {name} setting(s): {sorted(unknown)}")
    train = _TRAIN_DEFAULTS[name](**{k: v for k, v in settings.items() if k in TRAIN_KEYS})
    arch = _ARCH[name](**{k: v for k, v in settings.items() if k not in TRAIN_KEYS})
    return train, arch


def train_encoder(name: str, datasets: Sequence[Dataset], train: TrainConfig, arch,
                  log: Callable[[int, float], None] | None = None) -> tuple[object, TrainResult]:
    fn = liltab.train_liltab if _check(name) == "liltab" else d2v.train_d2v
    return fn(datasets, train, arch, log)


def untrained_encoder(name: str, arch, seed: int = 0):
    return _CLASS[_check(name)](arch, seed)


def load_encoder(directory: str | Path):
    path = Path(directory) / "manifest.json"
    name = json.loads(path.read_text()).get("encoder")
    return _CLASS[_check(name)].load(directory)


def encoder_gamma(enc) -> float:
    """Scale used by the pair-accuracy rule: the learned one for D2V, 1 otherwise."""
    return float(getattr(enc, "gamma", 1.0))
