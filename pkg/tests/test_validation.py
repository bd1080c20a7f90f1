import numpy as np
import pytest

from gridrisk.surrogate import ValidationReport, default_hal_params, select_model, validate_predictions
from gridrisk.surrogate.validation import QoiValidation

HAL = default_hal_params()


def linear_targets(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    Y = np.empty((n, 4))
    Y[:, 0] = rng.uniform(1e5, 2e5, n)
    Y[:, 1] = np.where(rng.random(n) < 0.2, rng.uniform(0, 300, n), 0.0)
    Y[:, 2] = rng.uniform(600, 1200, n)
    Y[:, 3] = rng.uniform(1500, 4000, n)
    return Y


def test_perfect_predictor_scores_zero():
    Y = linear_targets()
    rep = validate_predictions(Y, Y, HAL)
    for v in rep.qoi.values():
        assert v.safe_nmae == 0 and v.unsafe_nmae in (None, 0.0) and v.nhal == 0


def test_reg_unsafe_cell_absent():
    rep = validate_predictions(linear_targets(), linear_targets(seed=1), HAL)
    assert rep.qoi["reg_reserve"].unsafe_nmae is None
    assert rep.qoi["op_reserve"].unsafe_nmae is not None


def test_regions_partition_rows():
    rep = validate_predictions(linear_targets(), linear_targets(seed=1), HAL)
    for v in rep.qoi.values():
        assert v.n_safe + v.n_unsafe == 2000


def test_constant_mean_predictor():
    Y = linear_targets()
    pred = np.tile(Y.mean(axis=0), (len(Y), 1))
    rep = validate_predictions(Y, pred, HAL)
    # independent accumulator: plain loops
    for k, name in ((0, "cost"), (2, "reg_reserve")):
        mean = sum(Y[:, k]) / len(Y)
        dev = sum(abs(y - mean) for y in Y[:, k]) / len(Y)
        assert rep.qoi[name].safe_nmae == pytest.approx(dev / mean, rel=1e-12)
    op = Y[:, 3]
    mean_all = sum(op) / len(op)
    unsafe = [y for y in op if y < 2250]
    safe = [y for y in op if y >= 2250]
    norm = sum(unsafe) / len(unsafe)
    assert rep.qoi["op_reserve"].safe_nmae == pytest.approx(sum(abs(y - mean_all) for y in safe) / len(safe) / norm)
    assert rep.qoi["op_reserve"].unsafe_nmae == pytest.approx(
        sum(abs(y - mean_all) for y in unsafe) / len(unsafe) / norm
    )


def test_report_round_trip():
    rep = validate_predictions(linear_targets(), linear_targets(seed=2), HAL, "rf")
    assert ValidationReport.from_dict(rep.to_dict()) == rep


def report(model_id, op_unsafe, shed_unsafe, safe=0.01):
    q = {
        "cost": QoiValidation(safe, None, 1.0, 10, 0, 0.0),
        "load_shed": QoiValidation(safe, shed_unsafe, 1.0, 10, 1, 0.0),
        "reg_reserve": QoiValidation(safe, None, 1.0, 10, 0, 0.0),
        "op_reserve": QoiValidation(safe, op_unsafe, 1.0, 10, 1, 0.0),
    }
    return ValidationReport(model_id, q)


def test_select_single():
    assert select_model([report("only", 0.3, 0.2)]) == "only"


def test_select_table_ordering():
    # unsafe NMAE for op reserve / load shed, safe NMAE as the tie-breaker
    reps = [
        report("nn_mae", 0.039, 0.352, 0.0048),
        report("rf", 0.014, 0.053, 0.0017),
        report("nn_hal", 0.038, 0.289, 0.0048),
    ]
    assert select_model(reps) == "rf"


def test_select_ties():
    assert select_model([report("a", 0.1, 0.1), report("b", 0.1, 0.1)]) == "a"
    assert select_model([report("a", 0.1, 0.1, safe=0.2), report("b", 0.1, 0.1, safe=0.1)]) == "b"


def test_select_requires_candidates():
    with pytest.raises(ValueError):
        select_model([])
