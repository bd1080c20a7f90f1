"""Monte-Carlo forward propagation and the three levels of risk metrics."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
import pandas as pd

from .grid_model import CommitmentSchedule, SystemModel
from .scenarios import Provenance, ScenarioSet
from .sced import COST, LOAD_SHED, OP_RESERVE, QOI_NAMES, REG_RESERVE, DispatchState, Simulator, initial_dispatch

BELOW, ABOVE = "below", "above"


class Evaluator(Protocol):
    kind: str

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """(N, T, zones, 3) scenario block -> (N, T, 4) QoIs."""


class OracleEvaluator:
    """Chained dispatch LPs starting from ``y0`` at ``start_step``.

    With ``y0=None`` each scenario starts from its own ramp-free dispatch
    of the first step.
    """

    kind = "oracle"

    def __init__(
        self, system: SystemModel, schedule: CommitmentSchedule, y0: DispatchState | None = None, start_step: int = 0
    ):
        self.system = system
        self.schedule = schedule
        self.y0 = y0
        self.start_step = start_step

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        sim = Simulator(self.system, self.schedule)
        on = self.schedule.at_step(self.start_step)
        out = np.empty(values.shape[:2] + (4,))
        for i in range(values.shape[0]):
            y0 = self.y0 if self.y0 is not None else initial_dispatch(self.system, on, values[i, 0])
            try:
                out[i] = sim.run(y0, values[i], self.start_step).qoi
            except Exception as exc:
                raise RuntimeError(f"oracle failed on scenario {i}: {exc}") from exc
        return out


@dataclass(frozen=True)
class QoiMatrix:
    values: np.ndarray  # (N, T, 4)
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.ndim != 3 or v.shape[2] != 4 or w.shape != (v.shape[0],):
            raise ValueError(f"QoI matrix must be (N, T, 4) with N weights, got {v.shape} / {w.shape}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @property
    def n_scenarios(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> int:
        return self.values.shape[1]


def _evaluate_chunk(evaluator: Evaluator, values: np.ndarray) -> np.ndarray:
    return evaluator.evaluate(values)


def propagate(evaluator: Evaluator, scenarios: ScenarioSet, parallelism: int = 1) -> QoiMatrix:
    """Evaluate every scenario; rows stay keyed by scenario index."""
    if scenarios.provenance is Provenance.AUGMENTED:
        raise ValueError("augmented scenarios are training-only and cannot be used for risk estimation")
    values = scenarios.values
    n = values.shape[0]
    if parallelism <= 1 or n < 2:
        out = evaluator.evaluate(values)
    else:
        bounds = np.linspace(0, n, min(parallelism, n) + 1).astype(int)
        out = np.empty(values.shape[:2] + (4,))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = {
                (a, b): pool.submit(_evaluate_chunk, evaluator, values[a:b])
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            }
            for (a, b), fut in futures.items():
                out[a:b] = fut.result()
    return QoiMatrix(out, scenarios.weights)


# -- metrics ----------------------------------------------------------------


def _prepare(samples, weights):
    q = np.asarray(samples, dtype=float).ravel()
    if q.size == 0:
        raise ValueError("no samples")
    if weights is None:
        w = np.full(q.size, 1.0 / q.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != q.shape:
            raise ValueError("one weight per sample required")
        w = w / w.sum()
    return q, w


def level1(samples, weights=None, alpha: float = 5.0, direction: str = BELOW) -> float:
    """Mean of the worst ``alpha`` percent of samples.

    Worst means lowest for ``below`` and highest for ``above``. The tail is
    the first ceil(alpha N / 100) order statistics (nearest rank); with
    unequal weights, the shortest sorted prefix holding ``alpha`` percent of
    the mass.
    """
    if not 0 < alpha <= 100:
        raise ValueError("alpha must lie in (0, 100]")
    q, w = _prepare(samples, weights)
    if direction == ABOVE:
        q = -q
    order = np.argsort(q, kind="stable")
    qs, ws = q[order], w[order]
    if np.allclose(w, w[0], rtol=0, atol=1e-15):
        k = max(1, math.ceil(alpha * q.size / 100 - 1e-9))
        tail = qs[:k].mean()
    else:
        cum = np.cumsum(ws)
        k = int(np.searchsorted(cum, alpha / 100 - 1e-12)) + 1
        tail = float(np.dot(qs[:k], ws[:k]) / ws[:k].sum())
    return float(-tail if direction == ABOVE else tail) + 0.0  # no negative zero


def level2(samples, weights=None, qbar: float = 0.0, direction: str = BELOW) -> float:
    """Probability of a strict threshold violation."""
    q, w = _prepare(samples, weights)
    if direction == BELOW:
        bad = q < qbar
    elif direction == ABOVE:
        bad = q > qbar
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return float(min(1.0, w[bad].sum()))


def level3(samples, weights=None, consequence: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """Expected monetary consequence."""
    if consequence is None:
        raise ValueError("a consequence function is required")
    q, w = _prepare(samples, weights)
    return float(np.dot(w, consequence(q)))


def reserve_shortfall(qbar: float, voll: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda q: voll * np.maximum(qbar - np.asarray(q, dtype=float), 0.0)


def shed_consequence(voll: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda q: voll * np.maximum(np.asarray(q, dtype=float), 0.0)


@dataclass(frozen=True)
class RiskProfile:
    level1: np.ndarray  # (T, 4)
    level2: np.ndarray  # (T, 4), NaN for cost
    level3: np.ndarray  # (T, 4), NaN for cost
    thresholds: dict
    alpha: float
    start_step: int = 0

    def to_frame(self) -> pd.DataFrame:
        T = self.level1.shape[0]
        rows = []
        for t in range(T):
            for k, name in enumerate(QOI_NAMES):
                rows.append((self.start_step + t, name, self.level1[t, k], self.level2[t, k], self.level3[t, k]))
        return pd.DataFrame(rows, columns=["step", "qoi", "level1", "level2", "level3"])

    def write(self, path: str | Path, manifest: dict | None = None) -> None:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
        if manifest is not None:
            doc = {"alpha": self.alpha, "thresholds": self.thresholds, **manifest}
            path.with_suffix(".json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "RiskProfile":
        frame = pd.read_csv(path)
        steps = np.sort(frame["step"].unique())
        arrs = {}
        for col in ("level1", "level2", "level3"):
            pivot = frame.pivot(index="step", columns="qoi", values=col).reindex(steps)
            arrs[col] = pivot[list(QOI_NAMES)].to_numpy(dtype=float)
        meta = {}
        side = Path(path).with_suffix(".json")
        if side.exists():
            meta = json.loads(side.read_text())
        return cls(arrs["level1"], arrs["level2"], arrs["level3"], meta.get("thresholds", {}),
                   meta.get("alpha", float("nan")), int(steps[0]))


def qoi_thresholds(system: SystemModel) -> dict:
    """Adverse-event threshold and direction per QoI (cost has none)."""
    return {
        "cost": None,
        "load_shed": {"qbar": 0.0, "direction": ABOVE},
        "reg_reserve": {"qbar": system.mrr_reg, "direction": BELOW},
        "op_reserve": {"qbar": system.mrr_op, "direction": BELOW},
    }


def risk_profile(qoi: QoiMatrix, system: SystemModel, alpha: float = 5.0, start_step: int = 0) -> RiskProfile:
    T = qoi.horizon
    w = qoi.weights
    l1 = np.empty((T, 4))
    l2 = np.full((T, 4), np.nan)
    l3 = np.full((T, 4), np.nan)
    conseq = {
        LOAD_SHED: shed_consequence(system.voll),
        REG_RESERVE: reserve_shortfall(system.mrr_reg, system.voll),
        OP_RESERVE: reserve_shortfall(system.mrr_op, system.voll),
    }
    qbar = {LOAD_SHED: (0.0, ABOVE), REG_RESERVE: (system.mrr_reg, BELOW), OP_RESERVE: (system.mrr_op, BELOW)}
    for t in range(T):
        for k in range(4):
            samples = qoi.values[:, t, k]
            # cost and load shed are adverse when high
            direction = ABOVE if k in (COST, LOAD_SHED) else BELOW
            l1[t, k] = level1(samples, w, alpha, direction)
            if k in qbar:
                l2[t, k] = level2(samples, w, *qbar[k])
                l3[t, k] = level3(samples, w, conseq[k])
    return RiskProfile(l1, l2, l3, qoi_thresholds(system), alpha, start_step)


def scenario_consequence(qoi: np.ndarray, system: SystemModel) -> np.ndarray:
    """Total shed + reserve-shortage consequence ($) per scenario over the horizon."""
    q = np.asarray(qoi, dtype=float)
    shed = shed_consequence(system.voll)(q[..., LOAD_SHED])
    reg = reserve_shortfall(system.mrr_reg, system.voll)(q[..., REG_RESERVE])
    op = reserve_shortfall(system.mrr_op, system.voll)(q[..., OP_RESERVE])
    return (shed + reg + op).sum(axis=-1)
