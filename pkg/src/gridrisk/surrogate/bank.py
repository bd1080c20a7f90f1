"""Per-hour surrogate banks: just-in-time training, prediction and persistence."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..grid_model import HOURS, STEPS_PER_HOUR, feature_matrix, feature_names
from ..sced import LOAD_SHED, OP_RESERVE, REG_RESERVE
from .data import Dataset
from .forest import ForestModel, RFOptions, train_rf
from .hal import HalParams
from .nn import NetworkModel, NNOptions, train_nn
from .validation import ValidationReport, default_hal_params, validate_predictions

MODEL_KINDS = ("rf", "nn_mae", "nn_hal")


class HourTrainingError(RuntimeError):
    def __init__(self, hour: int, cause: BaseException):
        super().__init__(f"hour {hour}: {type(cause).__name__}: {cause}")
        self.hour = hour


@dataclass
class PredictStats:
    """Counts reg-reserve predictions clipped down to the op-reserve prediction."""

    reg_clipped: int = 0


def predict(model, features: np.ndarray, stats: PredictStats | None = None) -> np.ndarray:
    """QoI predictions in physical units, one row per feature row."""
    X = np.asarray(features, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    Y = model.predict_raw(X)
    Y[:, LOAD_SHED] = np.maximum(Y[:, LOAD_SHED], 0.0)
    over = Y[:, REG_RESERVE] > Y[:, OP_RESERVE]
    if over.any():
        Y[over, REG_RESERVE] = Y[over, OP_RESERVE]
        if stats is not None:
            stats.reg_clipped += int(over.sum())
    return Y[0] if single else Y


def model_from_dict(doc: dict):
    if doc["kind"] == "rf":
        return ForestModel.from_dict(doc)
    if doc["kind"] == "nn":
        return NetworkModel.from_dict(doc)
    raise ValueError(f"unknown model kind {doc['kind']!r}")


@dataclass
class TrainOptions:
    rf: RFOptions = field(default_factory=RFOptions)
    nn: NNOptions = field(default_factory=NNOptions)
    hal: list[HalParams] = field(default_factory=default_hal_params)


def hour_seed(master: int, hour: int) -> int:
    return int(np.random.SeedSequence([master, hour]).generate_state(1)[0])


@dataclass
class SurrogateBank:
    kind: str
    models: list
    feature_order: list[str]
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.models) != HOURS:
            raise ValueError(f"a day bank needs {HOURS} models, got {len(self.models)}")
        width = {m.n_features for m in self.models}
        if width != {len(self.feature_order)}:
            raise ValueError("all hourly models must share the bank's feature order")

    def predict(self, hour: int, features: np.ndarray, stats: PredictStats | None = None) -> np.ndarray:
        return predict(self.models[hour], features, stats)

    def report(self) -> ValidationReport:
        return ValidationReport.from_dict(self.manifest["pooled_validation"])

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        doc = {"kind": self.kind, "feature_order": self.feature_order, **self.manifest}
        (directory / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        for h, m in enumerate(self.models):
            (directory / f"hour_{h:02d}.json").write_text(json.dumps(m.to_dict()) + "\n")

    @classmethod
    def load(cls, directory: str | Path) -> "SurrogateBank":
        directory = Path(directory)
        path = directory / "manifest.json"
        if not path.exists():
            raise FileNotFoundError(f"{directory} holds no surrogate bank (manifest.json missing)")
        doc = json.loads(path.read_text())
        kind = doc.pop("kind")
        order = doc.pop("feature_order")
        models = [model_from_dict(json.loads((directory / f"hour_{h:02d}.json").read_text())) for h in range(HOURS)]
        return cls(kind, models, order, doc)


def _fit(kind: str, ds: Dataset, options: TrainOptions, seed: int):
    if kind == "rf":
        opts = RFOptions(**{**asdict(options.rf), "seed": seed})
        return train_rf(ds.X_train, ds.Y_train, opts)
    if kind in ("nn_mae", "nn_hal"):
        opts = NNOptions(**{**asdict(options.nn), "seed": seed})
        loss = kind.split("_")[1]
        return train_nn(ds.X_train, ds.Y_train, loss, options.hal if loss == "hal" else None, opts)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def _train_hour(args):
    kind, ds, options, seed = args
    try:
        model = _fit(kind, ds, options, seed)
    except Exception as exc:
        raise HourTrainingError(ds.hour, exc) from exc
    pred = predict(model, ds.X_test) if ds.test.size else None
    return model, pred


def jit_train(
    datasets: Sequence[Dataset],
    kind: str,
    options: TrainOptions | None = None,
    seed: int = 0,
    zones: Sequence[str] | None = None,
    parallelism: int = 1,
) -> SurrogateBank:
    """Train one model per hour; the manifest carries per-hour and pooled test metrics."""
    options = options or TrainOptions()
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    if sorted(ds.hour for ds in datasets) != list(range(HOURS)):
        raise ValueError(f"need one dataset for each of the {HOURS} hours")
    datasets = sorted(datasets, key=lambda d: d.hour)
    seeds = [hour_seed(seed, h) for h in range(HOURS)]
    jobs = [(kind, ds, options, s) for ds, s in zip(datasets, seeds)]
    if parallelism > 1:
        with ProcessPoolExecutor(parallelism) as pool:
            results = list(pool.map(_train_hour, jobs))
    else:
        results = [_train_hour(j) for j in jobs]

    n_features = datasets[0].X.shape[1]
    if zones is not None:
        order = feature_names(zones)
    else:
        order = [f"f{i}" for i in range(n_features)]
    hourly = []
    for ds, s, (model, pred) in zip(datasets, seeds, results):
        entry = {"hour": ds.hour, "seed": s, "n_train": int(ds.train.size), "n_test": int(ds.test.size)}
        if pred is not None:
            entry["validation"] = validate_predictions(ds.Y_test, pred, options.hal, kind).to_dict()
        if isinstance(model, NetworkModel):
            entry["best_epoch"] = model.best_epoch
            entry["final_train_loss"] = model.history[-1] if model.history else None
        hourly.append(entry)
    preds = [p for _, p in results if p is not None]
    manifest = {"master_seed": seed, "options": _options_doc(options), "hours": hourly}
    if preds:
        Y = np.concatenate([ds.Y_test for ds in datasets if ds.test.size])
        manifest["pooled_validation"] = validate_predictions(Y, np.concatenate(preds), options.hal, kind).to_dict()
    return SurrogateBank(kind, [m for m, _ in results], order, manifest)


def _options_doc(options: TrainOptions) -> dict:
    return {"rf": asdict(options.rf), "nn": asdict(options.nn), "hal": [asdict(p) for p in options.hal]}


class SurrogateEvaluator:
    """Risk evaluator backed by a bank: QoIs for each step come from that hour's model."""

    def __init__(self, bank: SurrogateBank, start_step: int = 0):
        self.bank = bank
        self.start_step = start_step
        self.stats = PredictStats()

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        n, T = values.shape[:2]
        feats = feature_matrix(values)
        out = np.empty((n, T, 4))
        hours = (self.start_step + np.arange(T)) // STEPS_PER_HOUR % HOURS
        for h in np.unique(hours):
            cols = np.flatnonzero(hours == h)
            X = feats[:, cols].reshape(-1, feats.shape[-1])
            out[:, cols] = self.bank.predict(int(h), X, self.stats).reshape(n, cols.size, 4)
        return out
