import numpy as np
import pytest

from metawarm.data import Split
from metawarm.hpo.evaluators import eval_elasticnet
from metawarm.hpo.matrix import PerformanceMatrix, build_matrix, load_matrix, save_matrix
from metawarm.hpo.space import elasticnet_space, sample_pool


def _split(id, seed, single_class=False):
    rng = np.random.default_rng(seed)
    y = np.tile([0.0, 1.0], 15)
    X = rng.normal(size=(30, 3)) + y[:, None]
    ytr = np.zeros(15) if single_class else y[:15]
    return Split(id, X[:15], ytr, X[15:], y[15:])


def test_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    m = PerformanceMatrix(["a", "b"], [0, 1, 2], rng.uniform(size=(2, 3)))
    save_matrix(m, tmp_path / "m.csv")
    back = load_matrix(tmp_path / "m.csv")
    assert back.dataset_ids == m.dataset_ids and back.config_ids == m.config_ids
    assert back.auc.tobytes() == m.auc.tobytes()


def test_rejects_bad_tables(tmp_path):
    with pytest.raises(ValueError):
        PerformanceMatrix(["a"], [0, 1], np.ones((1, 3)))
    with pytest.raises(ValueError, match="missing"):
        PerformanceMatrix(["a"], [0, 1], np.array([[0.5, np.nan]]))
    (tmp_path / "x.csv").write_text("foo,0\n")
    with pytest.raises(ValueError):
        load_matrix(tmp_path / "x.csv")


def test_lookups_and_ties():
    m = PerformanceMatrix(["a", "b"], [5, 7, 9], [[0.5, 0.9, 0.9], [0.6, 0.6, 0.6]])
    assert m.value("a", 7) == 0.9
    assert m.best_config("a") == 7
    assert m.constant_rows() == ["b"]
    assert m.subset(["b"]).auc.tolist() == [[0.6, 0.6, 0.6]]


def test_build_matrix_excludes_failing_dataset():
    pool = sample_pool(elasticnet_space(), 4, seed=0)
    splits = [_split("good", 0), _split("bad", 1, single_class=True), _split("also", 2)]
    m = build_matrix(splits, pool, eval_elasticnet)
    assert m.dataset_ids == ["good", "also"]
    assert "single class" in m.excluded["bad"]
    assert np.all((m.auc >= 0) & (m.auc <= 1))
    assert m.value("good", 2) == eval_elasticnet(splits[0], pool[2].assignments)


def test_build_matrix_parallel_matches_serial():
    pool = sample_pool(elasticnet_space(), 3, seed=1)
    splits = [_split(f"d{i}", i) for i in range(3)]
    a = build_matrix(splits, pool, eval_elasticnet, jobs=1)
    b = build_matrix(splits, pool, eval_elasticnet, jobs=2)
    assert a.auc.tobytes() == b.auc.tobytes()
