import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridrisk.surrogate import ABOVE, BELOW, HalParams, hal_loss, hal_subgradient
from gridrisk.surrogate.hal import unit_params

RESERVE = HalParams(qbar=500, direction=BELOW)
values = st.floats(-1e4, 1e4, allow_nan=False)


def test_exact_prediction_costs_nothing():
    assert hal_loss(321.0, 321.0, RESERVE) == 0.0


def test_safe_underestimate():
    assert hal_loss(600, 550, RESERVE) == pytest.approx(52.5)


def test_unsafe_overestimate():
    assert hal_loss(400, 450, RESERVE) == pytest.approx(55.0)


def test_subgradient_signs():
    assert hal_subgradient(600, 550, RESERVE) == -1.05
    assert hal_subgradient(400, 450, RESERVE) == 1.1
    assert hal_subgradient(400, 400, RESERVE) == 0.0


def test_region_boundary_is_safe():
    # the threshold itself counts as safe for both directions
    assert hal_loss(500, 490, RESERVE) == pytest.approx(1.05 * 10)
    assert hal_loss(0, 1, HalParams(qbar=0, direction=ABOVE)) == pytest.approx(1.0)


def test_no_threshold_uses_safe_weights():
    cost = HalParams()
    assert hal_loss(100, 90, cost) == pytest.approx(10.5)
    assert hal_loss(-1e9, 0, cost) == pytest.approx(1e9)


def test_subgradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    q = rng.uniform(0, 1000, 1000)
    qhat = rng.uniform(0, 1000, 1000)
    keep = np.abs(qhat - q) > 1e-2
    h = 1e-4
    for p in (RESERVE, HalParams(qbar=50, direction=ABOVE)):
        fd = (hal_loss(q, qhat + h, p) - hal_loss(q, qhat - h, p)) / (2 * h)
        np.testing.assert_allclose(hal_subgradient(q, qhat, p)[keep], fd[keep], atol=1e-6)


def test_unit_weights_give_absolute_error_on_10000_cases():
    rng = np.random.default_rng(1)
    q, qhat = rng.normal(0, 1000, (2, 10_000))
    for qbar in (None, 0.0):
        for d in (BELOW, ABOVE):
            np.testing.assert_array_equal(hal_loss(q, qhat, unit_params(qbar, d)), np.abs(qhat - q))


@settings(max_examples=300)
@given(values, values, st.sampled_from([None, -50.0, 0.0, 500.0]), st.sampled_from([BELOW, ABOVE]))
def test_unit_weights_property(q, qhat, qbar, d):
    assert hal_loss(q, qhat, unit_params(qbar, d)) == abs(qhat - q)


@settings(max_examples=300)
@given(values, values, st.sampled_from([BELOW, ABOVE]))
def test_nonnegative_and_zero_only_at_truth(q, qhat, d):
    loss = hal_loss(q, qhat, HalParams(qbar=10.0, direction=d))
    assert loss >= 0
    assert (loss == 0) == (q == qhat)


@given(st.floats(1e-3, 1e3))
def test_unsafe_region_costs_more(e):
    safe_q, unsafe_q = 600.0, 400.0
    for sign in (-1, 1):
        assert hal_loss(unsafe_q, unsafe_q + sign * e, RESERVE) > hal_loss(safe_q, safe_q + sign * e, RESERVE)


def test_invalid_params():
    with pytest.raises(ValueError):
        HalParams(u_safe=-1)
    with pytest.raises(ValueError):
        HalParams(direction="sideways")


def test_standardized_threshold():
    p = RESERVE.standardized(400.0, 50.0)
    assert p.qbar == 2.0 and p.direction == BELOW
    assert HalParams().standardized(3.0, 2.0).qbar is None
