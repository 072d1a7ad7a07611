"""Loss functions and the Adam optimizer."""

import math

import numpy as np
import pytest

from scenetemp.nn import (Adam, PROB_FLOOR, cross_entropy,
                          sequence_sum_squares)


def test_cross_entropy_uniform_is_log_k():
    probs = np.full((4, 70), 1.0 / 70.0)
    targets = np.zeros((4, 70))
    targets[np.arange(4), [0, 10, 35, 69]] = 1.0
    loss, _ = cross_entropy(probs, targets)
    assert abs(loss - math.log(70)) < 1e-12


def test_cross_entropy_perfect_prediction_is_zero():
    probs = np.zeros((2, 5))
    probs[:, 3] = 1.0
    targets = probs.copy()
    loss, _ = cross_entropy(probs, targets)
    assert abs(loss) < 1e-12


def test_cross_entropy_gradient_formula():
    rng = np.random.default_rng(0)
    probs = rng.random((3, 6)) + 0.1
    probs /= probs.sum(axis=1, keepdims=True)
    targets = rng.random((3, 6))
    targets /= targets.sum(axis=1, keepdims=True)
    _, dprobs = cross_entropy(probs, targets)
    np.testing.assert_allclose(dprobs, -targets / probs / 3.0, atol=1e-12)


def test_cross_entropy_floor_keeps_loss_finite():
    probs = np.zeros((1, 4))
    probs[0, 0] = 1.0
    targets = np.zeros((1, 4))
    targets[0, 3] = 1.0  # all mass on a zero-probability class
    loss, dprobs = cross_entropy(probs, targets)
    assert np.isfinite(loss)
    assert abs(loss - (-math.log(PROB_FLOOR))) < 1e-9
    assert np.isfinite(dprobs).all()
    assert dprobs[0, 3] == 0.0  # floored coordinate carries no gradient


def test_sum_squares_example():
    pred = np.array([[[5.0], [1.0]]])
    target = np.array([[[2.0], [1.0]]])
    loss, dpred = sequence_sum_squares(pred, target)
    assert loss == 9.0
    np.testing.assert_allclose(dpred, [[[6.0], [0.0]]], atol=0)


def test_sum_squares_is_unnormalized():
    rng = np.random.default_rng(1)
    pred = rng.standard_normal((2, 3, 70))
    target = rng.standard_normal((2, 3, 70))
    loss, dpred = sequence_sum_squares(pred, target)
    assert abs(loss - ((pred - target) ** 2).sum()) < 1e-12
    np.testing.assert_allclose(dpred, 2.0 * (pred - target), atol=1e-12)


def test_adam_zero_gradient_leaves_params():
    params = {"w": np.array([1.0, -2.0, 3.0])}
    opt = Adam(params, lr=0.5)
    opt.step(params, {"w": np.zeros(3)})
    np.testing.assert_array_equal(params["w"], [1.0, -2.0, 3.0])
    assert opt.t == 1


def test_adam_first_step_is_lr_times_sign():
    params = {"w": np.array([3.0, -2.0, 0.5])}
    opt = Adam(params, lr=0.01)
    grads = {"w": np.array([10.0, -0.001, 4.0])}
    before = params["w"].copy()
    opt.step(params, grads)
    delta = params["w"] - before
    np.testing.assert_allclose(delta, -0.01 * np.sign(grads["w"]),
                               atol=1e-7)


def test_adam_quadratic_descent():
    # f(w) = w^2 from w = 1 with lr = 0.1: steady descent until the iterate
    # first crosses zero (around step 11), then a small decaying wobble
    params = {"w": np.array([1.0])}
    opt = Adam(params, lr=0.1)
    traj = [abs(params["w"][0])]
    for _ in range(100):
        opt.step(params, {"w": 2.0 * params["w"]})
        traj.append(abs(params["w"][0]))
    assert all(b < a for a, b in zip(traj[:10], traj[1:11]))
    assert min(traj) < 1e-3
    assert max(traj[11:]) < 0.35  # overshoot stays well inside the start
    assert traj[-1] < 0.01


def test_adam_validation_and_state():
    with pytest.raises(ValueError):
        Adam({"w": np.zeros(1)}, lr=-0.1)
    params = {"w": np.ones(4)}
    opt = Adam(params, lr=0.0)
    opt.step(params, {"w": np.ones(4)})
    np.testing.assert_array_equal(params["w"], np.ones(4))

    opt2 = Adam(params, lr=0.003, beta1=0.8, beta2=0.99, eps=1e-7)
    opt2.step(params, {"w": np.full(4, 0.1)})
    clone = Adam(params)
    clone.load_state(opt2.state())
    assert clone.state() == opt2.state()


def test_adam_shape_mismatch():
    params = {"w": np.ones((2, 2))}
    opt = Adam(params, lr=0.1)
    with pytest.raises((ValueError, KeyError)):
        opt.step(params, {"w": np.ones(3)})
