"""Configuration spaces, surrogate evaluation, TPE and warm-start strategies."""
from .bo import OptimizationTrace, TraceStep, read_traces, run_bo, write_traces
from .evaluators import EVALUATORS, eval_elasticnet, eval_gbt, roc_auc
from .matrix import PerformanceMatrix, build_matrix, load_matrix, save_matrix
from .space import ConfigPool, ConfigSpace, HPConfig, Param, elasticnet_space, sample_pool, xgboost_space
from .tpe import tpe_propose
from .warmstart import knn_warmstart, rank_warmstart

__all__ = [
    "OptimizationTrace", "TraceStep", "read_traces", "run_bo", "write_traces",
    "EVALUATORS", "eval_elasticnet", "eval_gbt", "roc_auc",
    "PerformanceMatrix", "build_matrix", "load_matrix", "save_matrix",
    "ConfigPool", "ConfigSpace", "HPConfig", "Param", "elasticnet_space", "sample_pool", "xgboost_space",
    "tpe_propose", "knn_warmstart", "rank_warmstart",
]
