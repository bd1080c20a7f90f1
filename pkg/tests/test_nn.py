import numpy as np
import pytest

from gridrisk.surrogate import ABOVE, BELOW, HalParams, NetworkModel, NNOptions, TrainingDiverged, train_nn
from gridrisk.surrogate.nn import init_params, loss_and_grads
from oracles import backprop_vs_finite_differences

HAL = [HalParams(), HalParams(qbar=0.2, direction=ABOVE), HalParams(qbar=-0.1, direction=BELOW), HalParams(qbar=0.3)]


def linear_fixture(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 6))
    A = rng.normal(size=(6, 4))
    return X, X @ A + 0.01 * rng.normal(size=(n, 4))


@pytest.mark.parametrize("loss", ["mae", "hal"])
def test_backprop_matches_finite_differences(loss):
    rng = np.random.default_rng(5)
    W, b = init_params(5, rng)
    X = rng.normal(size=(40, 5))
    Y = rng.normal(size=(40, 4))
    worst, checked = backprop_vs_finite_differences(W, b, X, Y, loss, HAL, rng)
    assert checked >= 50
    assert worst <= 1e-4


def test_bias_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    W, b = init_params(5, rng)
    X, Y = rng.normal(size=(40, 5)), rng.normal(size=(40, 4))
    _, _, gb = loss_and_grads(W, b, X, Y, "hal", HAL)
    h = 1e-6
    k = len(b) - 1
    b[k][0] += h
    up = loss_and_grads(W, b, X, Y, "hal", HAL)[0]
    b[k][0] -= 2 * h
    down = loss_and_grads(W, b, X, Y, "hal", HAL)[0]
    b[k][0] += h
    assert gb[k][0] == pytest.approx((up - down) / (2 * h), rel=1e-4)


def test_zero_epochs_keeps_initialization():
    X, Y = linear_fixture(300)
    model = train_nn(X, Y, opts=NNOptions(max_epochs=0, seed=3))
    W, b = init_params(6, np.random.default_rng(3))
    for a, c in zip(model.weights, W):
        np.testing.assert_array_equal(a, c)
    pred = model.predict_raw(X[:7])
    assert pred.shape == (7, 4) and np.all(np.isfinite(pred))


def test_training_loss_falls_over_first_epochs():
    X, Y = linear_fixture()
    model = train_nn(X, Y, opts=NNOptions(max_epochs=5, seed=0))
    assert len(model.history) == 5
    assert all(a > b for a, b in zip(model.history, model.history[1:]))


def test_learns_linear_fixture():
    X, Y = linear_fixture(3000)
    model = train_nn(X[:2500], Y[:2500], opts=NNOptions(max_epochs=80, seed=1))
    nmae = np.abs(model.predict_raw(X[2500:]) - Y[2500:]).mean(axis=0) / np.abs(Y).mean(axis=0)
    assert np.all(nmae < 0.1)


def test_hal_training_runs_and_parameters_stay_finite():
    X, Y = linear_fixture(500)
    model = train_nn(X, Y, "hal", HAL, NNOptions(max_epochs=5))
    assert all(np.all(np.isfinite(w)) for w in model.weights)
    assert model.loss == "hal"


def test_hal_needs_params():
    X, Y = linear_fixture(50)
    with pytest.raises(ValueError):
        train_nn(X, Y, "hal", None)


def test_divergence_reports_epoch_and_batch():
    X, Y = linear_fixture(200)
    with np.errstate(all="ignore"), pytest.raises(TrainingDiverged, match=r"epoch \d+, batch \d+"):
        train_nn(X, Y, opts=NNOptions(lr=1e200, max_epochs=5))


def test_determinism_and_round_trip():
    X, Y = linear_fixture(400)
    a = train_nn(X, Y, opts=NNOptions(max_epochs=4, seed=2))
    b = train_nn(X, Y, opts=NNOptions(max_epochs=4, seed=2))
    assert a.predict_raw(X).tobytes() == b.predict_raw(X).tobytes()
    again = NetworkModel.from_dict(a.to_dict())
    assert again.predict_raw(X).tobytes() == a.predict_raw(X).tobytes()
    assert again.n_features == 6
