"""Per-hour training datasets built from simulation corpora."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..grid_model import HOURS, STEPS_PER_DAY, STEPS_PER_HOUR, feature_matrix
from ..sced import QOI_NAMES

CORPUS_COLUMNS = ["scenario_id", "step", *QOI_NAMES]


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # (M, F)
    Y: np.ndarray  # (M, 4)
    hour: int
    train: np.ndarray  # row indices
    test: np.ndarray
    scenario_id: np.ndarray  # (M,), augmented rows carry negative ids
    augmented: np.ndarray  # (M,) bool

    @property
    def X_train(self):
        return self.X[self.train]

    @property
    def Y_train(self):
        return self.Y[self.train]

    @property
    def X_test(self):
        return self.X[self.test]

    @property
    def Y_test(self):
        return self.Y[self.test]


def write_corpus(qoi: np.ndarray, path: str | Path, scenario_offset: int = 0) -> None:
    """``scenario_id,step,cost,load_shed,reg_reserve,op_reserve`` rows."""
    qoi = np.asarray(qoi, dtype=float)
    n, T, _ = qoi.shape
    frame = pd.DataFrame(
        {"scenario_id": np.repeat(np.arange(n) + scenario_offset, T), "step": np.tile(np.arange(T), n)}
    )
    for k, name in enumerate(QOI_NAMES):
        frame[name] = qoi[:, :, k].ravel()
    frame.to_csv(path, index=False, lineterminator="\n")


def read_corpus(path: str | Path, steps: int = STEPS_PER_DAY) -> np.ndarray:
    frame = pd.read_csv(path)
    missing = set(CORPUS_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path}: missing corpus columns {sorted(missing)}")
    frame = frame.sort_values(["scenario_id", "step"], kind="stable")
    ids = frame["scenario_id"].unique()
    counts = frame.groupby("scenario_id")["step"].nunique()
    if (counts != steps).any() or len(frame) != len(ids) * steps:
        bad = counts[counts != steps].index.tolist()[:5]
        raise ValueError(f"{path}: scenarios {bad} do not cover all {steps} steps")
    return frame[list(QOI_NAMES)].to_numpy(dtype=float).reshape(len(ids), steps, 4)


def scenario_split(n: int, seed: int = 0, train_frac: float = 0.7) -> np.ndarray:
    """Boolean train mask over scenario ids."""
    if not 0 < train_frac <= 1:
        raise ValueError("train_frac must lie in (0, 1]")
    perm = np.random.default_rng(seed).permutation(n)
    mask = np.zeros(n, dtype=bool)
    mask[perm[: int(round(train_frac * n))]] = True
    return mask


def build_datasets(
    qoi: np.ndarray,
    scenario_values: np.ndarray,
    augmented_qoi: np.ndarray | None = None,
    augmented_values: np.ndarray | None = None,
    seed: int = 0,
    train_frac: float = 0.7,
    min_scenarios: int = 100,
) -> list[Dataset]:
    """24 hourly datasets; the train/test split is drawn over scenario ids.

    ``qoi`` is (N, 288, 4) and ``scenario_values`` (N, 288, zones, 3).
    Augmented rows join the training split only.
    """
    qoi = np.asarray(qoi, dtype=float)
    values = np.asarray(scenario_values, dtype=float)
    n = qoi.shape[0]
    if qoi.shape[1] != STEPS_PER_DAY or values.shape[:2] != qoi.shape[:2]:
        raise ValueError("corpus and scenarios must both cover 288 steps for the same scenarios")
    if n < min_scenarios:
        raise ValueError(f"need at least {min_scenarios} scenarios, got {n}")
    nz = values.shape[2]
    feats = feature_matrix(values)  # (N, 288, F)
    if augmented_qoi is not None:
        aug_q = np.asarray(augmented_qoi, dtype=float)
        aug_v = np.asarray(augmented_values, dtype=float)
        if aug_v.shape[2] != nz:
            raise ValueError("augmented scenarios use a different zone set")
        aug_f = feature_matrix(aug_v)
    else:
        aug_q = np.zeros((0, STEPS_PER_DAY, 4))
        aug_f = np.zeros((0, STEPS_PER_DAY, feats.shape[-1]))

    is_train = scenario_split(n, seed, train_frac)

    out = []
    for h in range(HOURS):
        sl = slice(h * STEPS_PER_HOUR, (h + 1) * STEPS_PER_HOUR)
        X = feats[:, sl].reshape(-1, feats.shape[-1])
        Y = qoi[:, sl].reshape(-1, 4)
        sid = np.repeat(np.arange(n), STEPS_PER_HOUR)
        Xa = aug_f[:, sl].reshape(-1, feats.shape[-1])
        Ya = aug_q[:, sl].reshape(-1, 4)
        said = -1 - np.repeat(np.arange(aug_q.shape[0]), STEPS_PER_HOUR)
        Xall = np.concatenate([X, Xa])
        Yall = np.concatenate([Y, Ya])
        sids = np.concatenate([sid, said])
        aug = np.concatenate([np.zeros(len(sid), bool), np.ones(len(said), bool)])
        row_train = np.concatenate([is_train[sid], np.ones(len(said), bool)])
        train = np.flatnonzero(row_train)
        test = np.flatnonzero(~row_train)
        out.append(Dataset(Xall, Yall, h, train, test, sids, aug))
    return out
