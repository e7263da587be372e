"""Conditional hyperparameter spaces and fixed configuration pools."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

KINDS = ("uniform", "loguniform", "int", "categorical")


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    low: float = 0.0
    high: float = 1.0
    choices: tuple = ()
    condition: Callable[[dict], bool] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.kind == "categorical":
            if len(self.choices) < 1:
                raise ValueError(f"{self.name}: categorical needs choices")
        elif not self.low < self.high:
            raise ValueError(f"{self.name}: degenerate range [{self.low}, {self.high}]")
        if self.kind == "loguniform" and self.low <= 0:
            raise ValueError(f"{self.name}: loguniform needs a positive lower bound")

    def active(self, assigned: dict) -> bool:
        return self.condition is None or bool(self.condition(assigned))

    def draw(self, rng: np.random.Generator):
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        if self.kind == "loguniform":
            return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))
        if self.kind == "int":
            return int(rng.integers(int(self.low), int(self.high) + 1))
        return self.choices[int(rng.integers(len(self.choices)))]


@dataclass(frozen=True)
class Dimension:
    """Merged view of every Param sharing one name, as TPE sees it."""
    name: str
    kind: str
    low: float = 0.0
    high: float = 1.0
    choices: tuple = ()

    @property
    def numeric(self) -> bool:
        return self.kind != "categorical"

    def transform(self, value) -> float:
        return math.log(value) if self.kind == "loguniform" else float(value)

    @property
    def span(self) -> float:
        return self.transform(self.high) - self.transform(self.low)


@dataclass
class ConfigSpace:
    name: str
    params: list[Param]

    def sample(self, rng: np.random.Generator) -> dict[str, Any]:
        """Draw parameters in declaration order; each name is assigned at most once."""
        out: dict[str, Any] = {}
        for p in self.params:
            if p.name in out or not p.active(out):
                continue
            out[p.name] = p.draw(rng)
        return out

    def dimensions(self) -> list[Dimension]:
        merged: dict[str, list[Param]] = {}
        for p in self.params:
            merged.setdefault(p.name, []).append(p)
        dims = []
        for name, ps in merged.items():
            kinds = {p.kind for p in ps}
            if len(kinds) != 1:
                raise ValueError(f"{name}: conflicting kinds {kinds}")
            kind = kinds.pop()
            if kind == "categorical":
                choices: list = []
                for p in ps:
                    choices += [c for c in p.choices if c not in choices]
                dims.append(Dimension(name, kind, choices=tuple(choices)))
            else:
                dims.append(Dimension(name, kind, min(p.low for p in ps), max(p.high for p in ps)))
        return dims


@dataclass(frozen=True)
class SolverIs:
    """Picklable condition: the solver is one of ``solvers`` (or none of them if ``negate``)."""
    solvers: tuple
    negate: bool = False

    def __call__(self, assigned: dict) -> bool:
        return (assigned.get("solver") in self.solvers) != self.negate


def _liblinear_l2(assigned: dict) -> bool:
    return assigned.get("solver") == "liblinear" and assigned.get("penalty") == "l2"


def elasticnet_space() -> ConfigSpace:
    return ConfigSpace("elasticnet", [
        Param("tol", "loguniform", 1e-4, 1e-3),
        Param("C", "loguniform", 1e-4, 1e4),
        Param("solver", "categorical",
              choices=("lbfgs", "liblinear", "newton-cg", "newton-cholesky", "sag", "saga")),
        Param("intercept_scaling", "uniform", 1e-3, 1.0, condition=SolverIs(("liblinear",))),
        Param("penalty", "categorical", choices=("l1", "l2"), condition=SolverIs(("liblinear",))),
        Param("dual", "categorical", choices=(True, False), condition=_liblinear_l2),
        Param("penalty", "categorical", choices=("elasticnet", "l1", "l2", None),
              condition=SolverIs(("saga",))),
        Param("l1_ratio", "uniform", 0.0, 1.0, condition=SolverIs(("saga",))),
        Param("penalty", "categorical", choices=("l2", None),
              condition=SolverIs(("saga", "liblinear"), negate=True)),
    ])


def xgboost_space() -> ConfigSpace:
    return ConfigSpace("xgboost", [
        Param("n_estimators", "int", 1, 1000),
        Param("learning_rate", "uniform", 0.0, 1.0),
        Param("booster", "categorical", choices=("gblinear", "gbtree")),
        Param("subsample", "uniform", 0.5, 1.0),
        Param("max_depth", "int", 6, 15),
        Param("min_child_weight", "uniform", 2.0, 256.0),
        Param("colsample_bytree", "uniform", 0.2, 1.0),
        Param("colsample_bylevel", "uniform", 0.2, 1.0),
    ])


SPACES = {"elasticnet": elasticnet_space, "xgboost": xgboost_space, "gbt": xgboost_space}


@dataclass(frozen=True)
class HPConfig:
    config_id: int
    assignments: dict = field(hash=False)


@dataclass
class ConfigPool:
    space: ConfigSpace
    configs: list[HPConfig]

    def __len__(self) -> int:
        return len(self.configs)

    def __getitem__(self, config_id: int) -> HPConfig:
        return self.configs[config_id]

    @property
    def ids(self) -> list[int]:
        return [c.config_id for c in self.configs]

    def to_json(self) -> str:
        doc = {"space": self.space.name,
               "configs": [{"config_id": c.config_id, **c.assignments} for c in self.configs]}
        return json.dumps(doc, indent=1)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text: str) -> "ConfigPool":
        doc = json.loads(text)
        space = SPACES[doc["space"]]()
        configs = []
        for entry in doc["configs"]:
            entry = dict(entry)
            cid = entry.pop("config_id")
            configs.append(HPConfig(cid, entry))
        return cls(space, configs)

    @classmethod
    def load(cls, path: str | Path) -> "ConfigPool":
        return cls.from_json(Path(path).read_text())


def sample_pool(space: ConfigSpace, n: int = 100, seed: int = 0) -> ConfigPool:
    if n < 1:
        raise ValueError("pool size must be >= 1")
    rng = np.random.default_rng(seed)
    return ConfigPool(space, [HPConfig(i, space.sample(rng)) for i in range(n)])


def pool_from_assignments(space: ConfigSpace, assignments: Sequence[dict]) -> ConfigPool:
    return ConfigPool(space, [HPConfig(i, dict(a)) for i, a in enumerate(assignments)])
