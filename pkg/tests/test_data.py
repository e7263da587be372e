import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metawarm.data import (DataError, Dataset, FewShotTask, _quartile_bins, filter_eligible,
                           generate_fewshot_tasks, holdout_split, load_csv, make_folds,
                           mutual_information, read_tasks, regression_to_binary, save_csv,
                           select_top_features, standardize, task_split, task_view, write_tasks)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def _binary(n_pos, n_neg, n_features=3, seed=0, id="toy"):
    rng = np.random.default_rng(seed)
    y = np.array([1.0] * n_pos + [0.0] * n_neg)
    return Dataset(id, rng.normal(size=(len(y), n_features)), y)


# ---------------------------------------------------------------- load_csv

def test_load_csv_small_file(tmp_path):
    ds = load_csv(_write(tmp_path, "toy.csv", "a,b,y\n1,2,0\n3,4,1\n5,6,0\n"))
    assert (ds.n_rows, ds.n_features) == (3, 2)
    assert ds.id == "toy"
    assert ds.feature_names == ["a", "b"]
    np.testing.assert_array_equal(ds.target, [0, 1, 0])
    np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])


def test_load_csv_names_bad_cell(tmp_path):
    p = _write(tmp_path, "bad.csv", "a,b,y\n1,2,0\n3,oops,1\n")
    with pytest.raises(DataError, match=r"row 2, column 'b'"):
        load_csv(p)


@pytest.mark.parametrize("text", ["", "a,b,y\n", "a,b,y\n1,2,0\n"])
def test_load_csv_too_short(tmp_path, text):
    with pytest.raises(DataError, match="fewer than 2 rows"):
        load_csv(_write(tmp_path, "short.csv", text))


def test_load_csv_rejects_missing_and_nonbinary(tmp_path):
    with pytest.raises(DataError, match="missing value"):
        load_csv(_write(tmp_path, "m.csv", "a,y\n1,0\n,1\n"))
    with pytest.raises(DataError, match="only 0 and 1"):
        load_csv(_write(tmp_path, "r.csv", "a,y\n1,0.5\n2,1\n"))
    ds = load_csv(_write(tmp_path, "r2.csv", "a,y\n1,0.5\n2,1\n"), regression=True)
    np.testing.assert_array_equal(ds.target, [0.5, 1.0])


def test_save_load_roundtrip_is_exact(tmp_path):
    ds = _binary(5, 4, seed=3)
    save_csv(ds, tmp_path / "rt.csv")
    back = load_csv(tmp_path / "rt.csv")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.target, ds.target)


# ---------------------------------------------------------------- regression_to_binary

def test_binarize_symmetric_targets_keep_all_rows():
    ds = Dataset("r", np.arange(4.0)[:, None], np.array([1.0, 2, 3, 4]))
    out = regression_to_binary(ds, seed=0)
    np.testing.assert_array_equal(out.target, [0, 0, 1, 1])
    assert out.n_rows == 4


def test_binarize_subsamples_majority():
    ds = Dataset("r", np.arange(4.0)[:, None], np.array([1.0, 1, 1, 10]))
    out = regression_to_binary(ds, seed=5)
    assert sorted(out.target) == [0, 1]
    assert 3.0 in out.features[:, 0]  # the single positive survives


def test_binarize_constant_target():
    ds = Dataset("r", np.zeros((4, 1)), np.full(4, 5.0))
    with pytest.raises(DataError, match="constant target"):
        regression_to_binary(ds, seed=0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=40), st.integers(0, 99))
def test_binarize_balances_exactly(values, seed):
    t = np.array(values)
    if np.all(t == t[0]):
        return
    ds = Dataset("r", np.zeros((len(t), 1)), t)
    out = regression_to_binary(ds, seed)
    assert np.sum(out.target == 1) == np.sum(out.target == 0) >= 1


# ---------------------------------------------------------------- standardize

def test_standardize_examples():
    ds = Dataset("s", np.array([[1.0, 7.0], [3.0, 7.0]]), np.array([0.0, 1.0]))
    out = standardize(ds)
    np.testing.assert_allclose(out.features[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(out.features[:, 1], [0.0, 0.0])


def test_standardize_constant_column_of_three():
    ds = Dataset("s", np.array([[7.0], [7.0], [7.0]]), np.array([0.0, 1.0, 0.0]))
    np.testing.assert_array_equal(standardize(ds).features[:, 0], 0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.integers(1, 5), st.integers(0, 10_000))
def test_standardize_idempotent(n, m, seed):
    rng = np.random.default_rng(seed)
    ds = Dataset("s", rng.normal(3, 5, size=(n, m)), rng.integers(0, 2, n).astype(float))
    once = standardize(ds)
    twice = standardize(once)
    np.testing.assert_allclose(twice.features, once.features, atol=1e-10)
    ok = once.features.std(axis=0) > 0
    np.testing.assert_allclose(once.features[:, ok].mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(once.features[:, ok].std(axis=0), 1.0, atol=1e-12)


# ---------------------------------------------------------------- filter_eligible

@pytest.mark.parametrize("n,i,expected", [(10_000, 20, True), (10_001, 5, False), (50, 21, False)])
def test_filter_eligible(n, i, expected):
    ds = Dataset("f", np.zeros((n, i)), np.zeros(n))
    before = ds.features.copy()
    assert filter_eligible(ds) is expected
    np.testing.assert_array_equal(ds.features, before)


# ---------------------------------------------------------------- feature selection

def test_feature_equal_to_target_ranks_first():
    rng = np.random.default_rng(0)
    y = np.tile([0.0, 1.0], 50)
    X = rng.normal(size=(100, 12))
    X[:, 7] = y
    assert select_top_features(Dataset("m", X, y), k=10)[0] == 7


def test_independent_features_tie_break_by_index():
    y = np.array([0.0, 1.0] * 8)
    col = np.repeat([0.0, 1.0, 2.0, 3.0], 4)  # each level holds two of each class
    X = np.stack([col, col, col], axis=1)
    assert select_top_features(Dataset("m", X, y), k=2) == [0, 1]


def test_select_top_features_matches_contingency_oracle():
    # MI values from hand-counted 2x4 contingency tables (levels already quartiles):
    # f0 separates perfectly -> ln 2; f1 independent -> 0; f2 -> 0.5 ln 2.
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=float)
    f0 = [0, 0, 1, 1, 2, 2, 3, 3]
    f1 = [0, 1, 2, 3, 0, 1, 2, 3]
    f2 = [0, 0, 1, 2, 1, 3, 2, 3]
    X = np.array([f1, f2, f0], dtype=float).T
    frozen = [0.0, 0.34657359027997264, 0.6931471805599453]
    for i, expect in enumerate(frozen):
        assert mutual_information(_quartile_bins(X[:, i]), y) == pytest.approx(expect, abs=1e-12)
    assert select_top_features(Dataset("m", X, y), k=3) == [2, 1, 0]


def test_select_top_features_needs_enough_columns():
    with pytest.raises(DataError):
        select_top_features(_binary(5, 5, n_features=3), k=10)


# ---------------------------------------------------------------- few-shot tasks

def _check_task(task, ds):
    tr, va = set(task.train_rows), set(task.val_rows)
    assert len(task.train_rows) == 4 and len(task.val_rows) == 29
    assert not tr & va
    for part in (task.train_rows, task.val_rows):
        labels = ds.target[list(part)]
        assert {0.0, 1.0} <= set(labels)
    assert np.sum(ds.target[list(task.train_rows)]) == 2


def test_single_task_from_33_rows():
    ds = _binary(17, 16, n_features=12)
    tasks = generate_fewshot_tasks(ds, seed=0)
    assert len(tasks) == 1
    t = tasks[0]
    _check_task(t, ds)
    assert np.sum(ds.target[list(t.val_rows)]) == 15
    assert len(t.selected_features) == 10
    assert t.task_id == "toy__t0000"


def test_seventy_rows_give_two_tasks_and_four_leftovers():
    ds = _binary(35, 35, n_features=4)
    tasks = generate_fewshot_tasks(ds, seed=1)
    assert len(tasks) == 2
    used = [r for t in tasks for r in t.train_rows + t.val_rows]
    assert len(used) == len(set(used)) == 66
    # the class receiving 15 validation rows alternates
    assert [int(np.sum(ds.target[list(t.val_rows)])) for t in tasks] == [15, 14]
    assert all(sorted(t.selected_features) == [0, 1, 2, 3] for t in tasks)


def test_too_few_rows_for_a_task():
    with pytest.raises(DataError):
        generate_fewshot_tasks(_binary(15, 15), seed=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(17, 80), st.integers(17, 80), st.integers(0, 1000))
def test_generated_tasks_are_disjoint_and_valid(n_pos, n_neg, seed):
    ds = _binary(n_pos, n_neg, n_features=11, seed=seed)
    tasks = generate_fewshot_tasks(ds, seed)
    used = [r for t in tasks for r in t.train_rows + t.val_rows]
    assert len(used) == len(set(used))
    assert all(0 <= r < ds.n_rows for r in used)
    for t in tasks:
        _check_task(t, ds)


def test_task_manifest_roundtrip_and_views(tmp_path):
    ds = _binary(20, 20, n_features=12)
    tasks = generate_fewshot_tasks(ds, seed=2)
    write_tasks(tasks, tmp_path / "tasks.jsonl")
    assert read_tasks(tmp_path / "tasks.jsonl") == tasks
    line = (tmp_path / "tasks.jsonl").read_text().splitlines()[0]
    assert set(json.loads(line)) == {"parent_id", "task_id", "train_rows", "val_rows", "selected_features"}
    split = task_split(ds, tasks[0])
    assert split.X_train.shape == (4, 10) and split.X_val.shape == (29, 10)
    assert task_view(ds, tasks[0]).features.shape == (29, 10)
    assert FewShotTask.from_json(tasks[0].to_json()) == tasks[0]


# ---------------------------------------------------------------- folds and splits

def test_make_folds_even_split():
    folds = make_folds([f"d{i}" for i in range(10)], 5, seed=0)
    assert [len(f.test_ids) for f in folds] == [2] * 5


def test_make_folds_remainder():
    folds = make_folds([f"d{i}" for i in range(11)], 4, seed=0)
    assert sorted((len(f.test_ids) for f in folds), reverse=True) == [3, 3, 3, 2]


def test_make_folds_preconditions():
    with pytest.raises(DataError):
        make_folds(["a", "b"], 1, seed=0)
    with pytest.raises(DataError):
        make_folds(["a", "b"], 3, seed=0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(2, 10), st.integers(0, 10**6))
def test_make_folds_partition_and_determinism(n, k, seed):
    if n < k:
        return
    ids = [f"d{i:02d}" for i in range(n)]
    folds = make_folds(ids, k, seed)
    tests = [i for f in folds for i in f.test_ids]
    assert sorted(tests) == ids
    for f in folds:
        assert not set(f.train_ids) & set(f.test_ids)
        assert len(f.train_ids) + len(f.test_ids) == n
    assert make_folds(ids, k, seed) == folds


def test_holdout_split_is_stratified():
    split = holdout_split(_binary(30, 20), 0.3, seed=0)
    assert set(split.y_val) == {0.0, 1.0} and set(split.y_train) == {0.0, 1.0}
    assert len(split.y_val) == 9 + 6
