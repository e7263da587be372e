import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metawarm import tensor as T
from metawarm.tensor import (MLP, AdamState, Tensor, TrainConfig, adam_step, dropout, grad,
                             load_tensors, mlp_forward, save_tensors, train_loop)
from oracles import central_fd, max_rel_error


def _set_layers(net, weights, biases):
    for layer, w, b in zip(net.layers, weights, biases):
        layer.weight.data = np.array(w, dtype=float)
        layer.bias.data = np.array(b, dtype=float)


# ---------------------------------------------------------------- forward

def test_single_affine_layer():
    net = MLP([1, 1])
    _set_layers(net, [[[2.0]]], [[1.0]])
    assert mlp_forward(net, [[3.0]]).data.tolist() == [[7.0]]


def test_relu_hidden_layer():
    net = MLP([2, 2, 2])
    _set_layers(net, [np.eye(2), np.eye(2)], [np.zeros(2), np.zeros(2)])
    np.testing.assert_array_equal(mlp_forward(net, [[-1.0, 2.0]]).data, [[0.0, 2.0]])


def test_two_layer_hand_product():
    net = MLP([2, 2, 2])
    W1, b1 = np.array([[1.0, -2.0], [0.5, 3.0]]), np.array([0.25, -1.0])
    W2, b2 = np.array([[2.0, 1.0], [-1.0, 4.0]]), np.array([0.5, 0.0])
    _set_layers(net, [W1, W2], [b1, b2])
    x = np.array([[1.0, 2.0]])
    # hidden = relu([1 + 1 + .25, -2 + 6 - 1]) = [2.25, 3]
    expected = [[2.25 * 2 + 3 * -1 + 0.5, 2.25 * 1 + 3 * 4]]
    np.testing.assert_allclose(mlp_forward(net, x).data, expected, atol=1e-12)


def test_forward_shape_mismatch():
    with pytest.raises(ValueError):
        mlp_forward(MLP([3, 2]), np.zeros((1, 2)))


def test_dropout_eval_is_identity_and_training_is_seeded():
    net = MLP([4, 8, 8, 2], dropout_rate=0.5, rng=np.random.default_rng(1))
    x = np.random.default_rng(2).normal(size=(5, 4))
    base = net(x).data
    np.testing.assert_array_equal(mlp_forward(net, x, training=False, seed=3).data, base)
    a = mlp_forward(net, x, training=True, seed=3).data
    b = mlp_forward(net, x, training=True, seed=3).data
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, base)
    t = Tensor(np.ones((3, 3)))
    assert dropout(t, 0.9, False, None) is t


# ---------------------------------------------------------------- gradients

def test_power_rule():
    (g,) = grad(lambda w: w ** 2, [3.0])
    assert g == pytest.approx(6.0)


def test_norm_gradient():
    (g,) = grad(lambda x: T.norm(x), [np.array([3.0, 4.0])])
    np.testing.assert_allclose(g, [0.6, 0.8], atol=1e-15)


def test_norm_gradient_zero_subgradient():
    (g,) = grad(lambda x: T.tsum(T.row_norm(x)), [np.zeros((2, 3))])
    np.testing.assert_array_equal(g, 0.0)


def test_grad_requires_scalar():
    with pytest.raises(ValueError):
        grad(lambda x: x * 2.0, [np.ones(3)])


def test_mean_pool_gradient_is_one_over_n():
    (g,) = grad(lambda x: T.tsum(T.mean(x, axis=0)), [np.ones((4, 3))])
    np.testing.assert_allclose(g, 0.25)
    (g,) = grad(lambda x: T.tsum(T.segment_mean(x, np.array([0, 0, 1, 1, 1]), 2)),
                [np.ones((5, 2))])
    np.testing.assert_allclose(g[:2], 0.5)
    np.testing.assert_allclose(g[2:], 1 / 3)


def _random_composite(seed):
    """A random loss over a small net touching every differentiable primitive."""
    rng = np.random.default_rng(seed)
    n_layers = int(rng.integers(1, 4))
    sizes = [int(s) for s in rng.integers(1, 9, size=n_layers + 1)]
    params = []
    for a, b in zip(sizes[:-1], sizes[1:]):
        params += [rng.normal(size=(a, b)), rng.normal(size=b) * 0.1]
    x = rng.normal(size=(int(rng.integers(2, 7)), sizes[0]))
    seg = rng.integers(0, 2, size=len(x))
    seg[:2] = [0, 1]
    kind = seed % 4

    def loss(*ps):
        h = Tensor(x)
        for i in range(n_layers):
            h = T.matmul(h, ps[2 * i]) + ps[2 * i + 1]
            if i < n_layers - 1:
                h = T.relu(h)
        if kind == 0:
            return T.mean(h * h) + T.tsum(T.row_norm(h)) / 3.0
        if kind == 1:
            pooled = T.segment_mean(h, seg, 2)
            return T.norm(T.concat([pooled, T.take(h, [0, 1])], axis=0))
        if kind == 2:
            return T.tsum(T.log(T.exp(T.clip(h, -3.0, 3.0)) + 1.0))
        return T.mean(T.exp(T.reshape(h, (-1,)) * 0.1)) - T.tsum(T.mean(h, axis=0))

    return loss, params


@pytest.mark.parametrize("seed", range(120))
def test_gradient_matches_finite_differences(seed):
    loss, params = _random_composite(seed)
    analytic = grad(loss, params)
    numeric = central_fd(lambda *ps: loss(*[Tensor(p) for p in ps]).item(), params)
    assert max_rel_error(np.concatenate([a.ravel() for a in analytic]),
                         np.concatenate([n.ravel() for n in numeric])) < 1e-4


# ---------------------------------------------------------------- adam

def test_adam_zero_gradient_is_fixed_point():
    p = np.array([1.0, -2.0])
    adam_step(AdamState(), [p], [np.zeros(2)], lr=0.1, weight_decay=0.0)
    np.testing.assert_array_equal(p, [1.0, -2.0])


def test_adam_first_step_is_minus_lr():
    p = np.array([0.5])
    adam_step(AdamState(), [p], [np.array([1.0])], lr=1e-3)
    # m_hat = 1, v_hat = 1, so the step is lr / (1 + eps)
    assert p[0] == pytest.approx(0.5 - 1e-3 / (1 + 1e-8), abs=1e-15)


def test_adam_decoupled_weight_decay():
    p = np.array([2.0])
    adam_step(AdamState(), [p], [np.zeros(1)], lr=0.01, weight_decay=0.1)
    assert p[0] == pytest.approx(2.0 * (1 - 0.001), abs=1e-15)


def test_adam_rejects_non_finite_gradient():
    with pytest.raises(FloatingPointError):
        adam_step(AdamState(), [np.zeros(1)], [np.array([np.nan])], lr=0.1)


# ---------------------------------------------------------------- training loop

def _scalar_problem(loss_of_w, cfg, w0=0.0):
    w = Tensor(np.array([w0]), requires_grad=True)
    result = train_loop([w], lambda e, rng: [None], lambda b, rng: loss_of_w(w), cfg)
    return w, result


def test_constant_loss_stops_after_patience():
    cfg = TrainConfig(num_epochs=100, early_stopping_epochs=3)
    _, result = _scalar_problem(lambda w: T.tsum(w * 0.0) + 1.0, cfg)
    assert len(result.history) == 4
    assert result.stopped_early and result.best_epoch == 0


def test_decreasing_loss_runs_all_epochs():
    cfg = TrainConfig(num_epochs=50, learning_rate=1e-3, early_stopping_epochs=2)
    _, result = _scalar_problem(lambda w: T.tsum((w - 2.0) ** 2), cfg)
    assert len(result.history) == 50 and not result.stopped_early
    assert all(b < a for a, b in zip(result.history, result.history[1:]))


def test_convex_problem_reaches_minimum():
    cfg = TrainConfig(num_epochs=5000, learning_rate=0.01, early_stopping_epochs=100)
    w, _ = _scalar_problem(lambda w: T.tsum((w - 2.0) ** 2), cfg)
    assert abs(w.data[0] - 2.0) < 1e-2


def test_best_parameters_restored():
    # loss rises after the first step, so epoch 0's parameters are kept
    calls = []

    def loss(w):
        calls.append(float(w.data[0]))
        return T.tsum(w * 0.0) + float(len(calls))

    w, result = _scalar_problem(loss, TrainConfig(num_epochs=5, early_stopping_epochs=2))
    assert result.best_epoch == 0
    assert w.data[0] == calls[0]


def test_zero_epochs_is_noop():
    w, result = _scalar_problem(lambda w: T.tsum(w ** 2), TrainConfig(num_epochs=0), w0=1.5)
    assert result.history == [] and w.data[0] == 1.5


def test_non_finite_loss_aborts():
    with pytest.raises(FloatingPointError, match="non-finite loss"):
        _scalar_problem(lambda w: T.tsum(w * 0.0) + math.inf, TrainConfig(num_epochs=3))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(weight_decay=-1.0)


# ---------------------------------------------------------------- serialization

@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4)), min_size=1, max_size=4), st.integers(0, 999))
def test_tensor_files_roundtrip_bit_exact(tmp_path_factory, shapes, seed):
    rng = np.random.default_rng(seed)
    tensors = {f"t{i}": rng.normal(size=s) * 10.0 ** rng.integers(-300, 300) for i, s in enumerate(shapes)}
    d = tmp_path_factory.mktemp("blobs")
    save_tensors(d, {"encoder": "x", "architecture": {"a": 1}}, tensors)
    manifest, back = load_tensors(d)
    assert manifest == {"encoder": "x", "architecture": {"a": 1}}
    for k, v in tensors.items():
        assert back[k].tobytes() == v.tobytes()
