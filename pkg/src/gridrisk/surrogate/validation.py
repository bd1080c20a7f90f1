"""Safe/unsafe-region validation of QoI predictions and model selection."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..sced import COST, LOAD_SHED, OP_RESERVE, QOI_NAMES, REG_RESERVE
from .hal import ABOVE, BELOW, HalParams, hal_loss

# normalizer: mean over all test rows, or mean over unsafe test rows
_NORMALIZE_BY_UNSAFE = {COST: False, REG_RESERVE: False, OP_RESERVE: True, LOAD_SHED: True}


def default_hal_params(mrr_reg: float = 500.0, mrr_op: float = 2250.0) -> list[HalParams]:
    """Per-QoI HAL settings in QOI_NAMES order; cost has no unsafe region."""
    return [
        HalParams(),
        HalParams(qbar=0.0, direction=ABOVE),
        HalParams(qbar=mrr_reg, direction=BELOW),
        HalParams(qbar=mrr_op, direction=BELOW),
    ]


@dataclass(frozen=True)
class QoiValidation:
    safe_nmae: float
    unsafe_nmae: float | None
    normalizer: float
    n_safe: int
    n_unsafe: int
    nhal: float


@dataclass
class ValidationReport:
    model_id: str
    qoi: dict[str, QoiValidation] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "qoi": {k: asdict(v) for k, v in self.qoi.items()}}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ValidationReport":
        return cls(doc["model_id"], {k: QoiValidation(**v) for k, v in doc["qoi"].items()})


def validate_predictions(
    Y_true: np.ndarray, Y_pred: np.ndarray, hal: Sequence[HalParams], model_id: str = "model"
) -> ValidationReport:
    Y_true = np.asarray(Y_true, dtype=float)
    Y_pred = np.asarray(Y_pred, dtype=float)
    if Y_true.shape != Y_pred.shape or Y_true.shape[0] == 0:
        raise ValueError("need matching, non-empty prediction and target arrays")
    report = ValidationReport(model_id)
    for k, name in enumerate(QOI_NAMES):
        q, qhat = Y_true[:, k], Y_pred[:, k]
        p = hal[k]
        unsafe = p.unsafe(q)
        safe = ~unsafe
        abs_err = np.abs(qhat - q)
        if _NORMALIZE_BY_UNSAFE[k] and unsafe.any():
            norm = float(np.mean(q[unsafe]))
        else:
            norm = float(np.mean(q))
        if not abs(norm) > 1e-12:
            norm = 1.0
        norm = abs(norm)
        safe_nmae = float(abs_err[safe].mean() / norm) if safe.any() else float("nan")
        unsafe_nmae = float(abs_err[unsafe].mean() / norm) if unsafe.any() else None
        nhal = float(np.mean(hal_loss(q, qhat, p)) / norm)
        report.qoi[name] = QoiValidation(safe_nmae, unsafe_nmae, norm, int(safe.sum()), int(unsafe.sum()), nhal)
    return report


def validate(model, X_test: np.ndarray, Y_test: np.ndarray, hal: Sequence[HalParams], model_id: str = "model"):
    from .bank import predict

    return validate_predictions(Y_test, predict(model, X_test), hal, model_id)


def selection_score(report: ValidationReport) -> tuple[float, float]:
    unsafe = [report.qoi[n].unsafe_nmae for n in ("op_reserve", "load_shed") if n in report.qoi]
    unsafe = [u for u in unsafe if u is not None]
    safe = [v.safe_nmae for v in report.qoi.values() if np.isfinite(v.safe_nmae)]
    primary = float(np.mean(unsafe)) if unsafe else float(np.mean(safe))
    return primary, float(np.mean(safe)) if safe else float("inf")


def select_model(reports: Sequence[ValidationReport]) -> str:
    """Lowest mean unsafe NMAE (op reserve, load shed); ties by safe NMAE, then order."""
    if not reports:
        raise ValueError("no candidate reports")
    best = min(range(len(reports)), key=lambda i: (*selection_score(reports[i]), i))
    return reports[best].model_id
