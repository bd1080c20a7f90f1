"""Per-hour risk surrogates: hazard-aware loss, forest and network models, banks."""

from .bank import MODEL_KINDS, PredictStats, SurrogateBank, SurrogateEvaluator, TrainOptions, jit_train, predict
from .data import Dataset, build_datasets, read_corpus, scenario_split, write_corpus
from .forest import ForestModel, RFOptions, train_rf
from .hal import ABOVE, BELOW, HalParams, hal_loss, hal_subgradient
from .nn import NetworkModel, NNOptions, TrainingDiverged, train_nn
from .validation import ValidationReport, default_hal_params, select_model, validate, validate_predictions

__all__ = [
    "ABOVE",
    "BELOW",
    "MODEL_KINDS",
    "Dataset",
    "ForestModel",
    "HalParams",
    "NNOptions",
    "NetworkModel",
    "PredictStats",
    "RFOptions",
    "SurrogateBank",
    "SurrogateEvaluator",
    "TrainOptions",
    "TrainingDiverged",
    "ValidationReport",
    "build_datasets",
    "default_hal_params",
    "hal_loss",
    "hal_subgradient",
    "jit_train",
    "predict",
    "read_corpus",
    "scenario_split",
    "select_model",
    "train_nn",
    "train_rf",
    "validate",
    "validate_predictions",
    "write_corpus",
]
