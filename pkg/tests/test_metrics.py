import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metawarm.data import Dataset
from metawarm.hpo.bo import OptimizationTrace, TraceStep
from metawarm.hpo.matrix import PerformanceMatrix
from metawarm.metrics import (NEMENYI_Q, adtm, aggregate_folds, calinski_harabasz, ch_probe, dtm_trajectory,
                              friedman_test, nemenyi_cd, pair_accuracy_probe, pca_2d, probe_encoder)
from oracles import ch_brute, dtm_brute, friedman_brute, studentized_range_q


def _trace(dataset_id, matrix, config_ids, method="m", fold=0):
    t = OptimizationTrace(dataset_id, method, fold)
    best = -math.inf
    for it, c in enumerate(config_ids, 1):
        v = matrix.value(dataset_id, c)
        best = max(best, v)
        t.steps.append(TraceStep(it, c, v, best))
    return t


# ---------------------------------------------------------------- ADTM

def test_dtm_hand_example():
    m = PerformanceMatrix(["a"], [0, 1, 2], [[0.5, 0.6, 0.8]])
    np.testing.assert_allclose(dtm_trajectory(_trace("a", m, [1, 2]), m), [2 / 3, 0.0], atol=1e-15)
    assert dtm_trajectory(_trace("a", m, [2, 0]), m).tolist() == [0.0, 0.0]


def test_adtm_averages_datasets():
    m = PerformanceMatrix(["a", "b"], [0, 1], [[0.2, 0.9], [0.3, 0.7]])
    rep = adtm([_trace("a", m, [0, 1]), _trace("b", m, [1, 0])], m)
    np.testing.assert_array_equal(rep.mean, [0.5, 0.0])
    assert rep.method == "m"


def test_adtm_rejects_constant_rows_and_ragged_traces():
    m = PerformanceMatrix(["a", "b"], [0, 1], [[0.5, 0.5], [0.1, 0.9]])
    with pytest.raises(ValueError, match="constant"):
        adtm([_trace("a", m, [0])], m)
    with pytest.raises(ValueError):
        adtm([_trace("b", m, [0]), _trace("b", m, [0, 1], fold=1)], m)
    with pytest.raises(ValueError):
        adtm([], m)


@pytest.mark.parametrize("seed", range(100))
def test_adtm_matches_brute_on_random_matrices(seed):
    rng = np.random.default_rng(seed)
    auc = rng.uniform(size=(5, 8))
    m = PerformanceMatrix([f"d{i}" for i in range(5)], list(range(8)), auc)
    traces = [_trace(d, m, [int(c) for c in rng.permutation(8)[:6]]) for d in m.dataset_ids]
    rep = adtm(traces, m)
    brute = [dtm_brute(list(m.row(t.dataset_id)), [s.raw_auc for s in t.steps]) for t in traces]
    np.testing.assert_allclose(rep.mean, np.mean(brute, axis=0), atol=1e-10)
    assert np.all(np.diff(rep.mean) <= 0) and np.all((rep.mean >= 0) & (rep.mean <= 1))
    # positive affine rescaling of the row cancels in the min-max scaling
    a, b = rng.uniform(0.1, 5), rng.uniform(-3, 3)
    m2 = PerformanceMatrix(m.dataset_ids, m.config_ids, a * auc + b)
    rescaled = [_trace(t.dataset_id, m2, t.config_ids) for t in traces]
    np.testing.assert_allclose(adtm(rescaled, m2).mean, rep.mean, atol=1e-12)


def test_aggregate_folds():
    mean, half = aggregate_folds([np.array([0.4]), np.array([0.6])])
    assert mean[0] == pytest.approx(0.5)
    assert half[0] == pytest.approx(0.196, abs=5e-4)
    mean, half = aggregate_folds([np.ones(3)] * 4)
    assert half.tolist() == [0.0] * 3
    with pytest.raises(ValueError):
        aggregate_folds([np.ones(3)])
    with pytest.raises(ValueError):
        aggregate_folds([np.ones(3), np.ones(2)])


# ---------------------------------------------------------------- CH

def test_ch_examples():
    assert calinski_harabasz([0.0, 1.0, 4.0, 5.0], [0, 0, 1, 1]) == pytest.approx(32.0)
    assert calinski_harabasz([[1.0, 0], [1.0, 0], [3.0, 3], [3.0, 3]], [0, 0, 1, 1]) == math.inf
    with pytest.raises(ValueError):
        calinski_harabasz([[0.0], [1.0]], [0, 0])
    with pytest.raises(ValueError):
        calinski_harabasz([[0.0], [1.0]], [0, 1])


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 50), st.integers(1, 4), st.integers(2, 5), st.integers(0, 10**6))
def test_ch_matches_brute(m, p, k, seed):
    if m <= k:
        return
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, p))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, m - k)])
    got = calinski_harabasz(X, labels)
    want = ch_brute(X, labels)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-10)
    perm = rng.permutation(m)
    assert calinski_harabasz(X[perm], labels[perm]) == pytest.approx(got, rel=1e-12)


# ---------------------------------------------------------------- Friedman and Nemenyi

def test_friedman_examples():
    stat, ranks = friedman_test([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    assert stat == pytest.approx(4.0) and ranks.tolist() == [1.0, 2.0, 3.0]
    stat, ranks = friedman_test(np.full((3, 4), 0.2))
    assert stat == 0.0 and ranks.tolist() == [2.0, 2.0, 2.0]
    stat, _ = friedman_test([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]], lower_is_better=False)
    assert stat == pytest.approx(4.0)
    with pytest.raises(ValueError):
        friedman_test([[1.0, 2.0]])


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 6), st.integers(2, 12), st.integers(0, 10**6))
def test_friedman_matches_brute_and_is_rank_based(k, n, seed):
    rng = np.random.default_rng(seed)
    scores = rng.integers(0, 5, size=(k, n)) / 5.0
    stat, ranks = friedman_test(scores)
    want_stat, want_ranks = friedman_brute(scores.tolist())
    assert stat == pytest.approx(want_stat, abs=1e-10)
    np.testing.assert_allclose(ranks, want_ranks, atol=1e-12)
    assert friedman_test(np.exp(3 * scores) - 7)[0] == pytest.approx(stat, abs=1e-10)
    assert friedman_test(scores[:, rng.permutation(n)])[0] == pytest.approx(stat, abs=1e-10)


def test_nemenyi_examples():
    assert nemenyi_cd(4, 24) == pytest.approx(2.569 * math.sqrt(20 / 144))
    assert nemenyi_cd(4, 24) == pytest.approx(0.9574, abs=5e-5)
    assert nemenyi_cd(2, 9) == pytest.approx(1.960 / 3)
    assert nemenyi_cd(3, 10) > nemenyi_cd(3, 11)
    for bad in [dict(k=1, n=5), dict(k=11, n=5), dict(k=3, n=0), dict(k=3, n=5, alpha=0.01)]:
        with pytest.raises(ValueError):
            nemenyi_cd(**bad)


@pytest.mark.parametrize("alpha", [0.05, 0.10])
def test_q_table_matches_studentized_range(alpha):
    for k, q in enumerate(NEMENYI_Q[alpha], start=2):
        assert q == pytest.approx(studentized_range_q(k, alpha), abs=1.5e-3)


# ---------------------------------------------------------------- probes

def _two_datasets():
    rng = np.random.default_rng(0)
    y = np.tile([0.0, 1.0], 20)
    return [Dataset("A", rng.normal(size=(40, 3)), y), Dataset("B", rng.normal(size=(40, 3)) + 10, y)]


def _perfect(views):
    return np.array([[0.0, 0.0] if np.mean(X) < 5 else [10.0, 0.0] for X, _ in views])


def test_perfect_encoder_scores_one():
    acc, sd = pair_accuracy_probe(_perfect, _two_datasets(), n_pairs=40, repetitions=5)
    assert (acc, sd) == (1.0, 0.0)


def test_constant_encoder_scores_exactly_half():
    acc, sd = pair_accuracy_probe(lambda v: np.zeros((len(v), 3)), _two_datasets(), n_pairs=40, repetitions=5)
    assert (acc, sd) == (0.5, 0.0)
    with pytest.raises(ValueError):
        pair_accuracy_probe(_perfect, _two_datasets()[:1])


def test_ch_probe_and_report():
    assert ch_probe(_perfect, _two_datasets(), views_per_dataset=5, repetitions=3) == (math.inf, 0.0)
    noisy = lambda v: np.array([[np.mean(X), np.std(X)] for X, _ in v])
    rep = probe_encoder(noisy, _two_datasets(), n_pairs=20, views_per_dataset=5, repetitions=3)
    assert 0 <= rep.accuracy_mean <= 1 and rep.accuracy_std >= 0 and rep.ch_mean > 1 and rep.repetitions == 3


def test_pca_projection():
    rng = np.random.default_rng(0)
    X = np.outer(rng.normal(size=30), [1.0, 2.0, 2.0]) + 5
    P = pca_2d(X)
    assert P.shape == (30, 2)
    np.testing.assert_allclose(np.abs(P[:, 0]), np.abs((X - X.mean(0)) @ np.array([1, 2, 2]) / 3), atol=1e-10)
    np.testing.assert_allclose(P[:, 1], 0.0, atol=1e-10)
    assert pca_2d(np.ones((3, 1))).shape == (3, 2)
