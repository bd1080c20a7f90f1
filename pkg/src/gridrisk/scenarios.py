"""Day-ahead, short-term and stress-augmented Monte-Carlo scenario sets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .grid_model import CHANNELS, STEPS_PER_HOUR, Realization, _frame_to_array


class Provenance(str, Enum):
    DA = "DA"
    ST = "ST"
    AUGMENTED = "Augmented"


@dataclass(frozen=True)
class ScenarioSet:
    """N trajectories of zonal load/wind/solar, shape (N, T, zones, 3)."""

    values: np.ndarray
    zones: tuple[str, ...]
    provenance: Provenance = Provenance.DA
    seed: int | None = None
    weights: np.ndarray | None = None
    mix_weights: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 4 or v.shape[-1] != 3 or v.shape[2] != len(self.zones):
            raise ValueError(f"scenario array must be (N, T, {len(self.zones)}, 3), got {v.shape}")
        if v.shape[0] < 1:
            raise ValueError("scenario set is empty")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("scenario values must be finite and nonnegative")
        v.setflags(write=False)
        w = np.full(v.shape[0], 1.0 / v.shape[0]) if self.weights is None else np.asarray(self.weights, float)
        if w.shape != (v.shape[0],) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative, one per scenario, and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> int:
        return self.values.shape[1]

    def realization(self, i: int, t: int) -> Realization:
        return Realization.from_array(self.values[i, t], self.zones)

    def subset(self, idx: Sequence[int]) -> "ScenarioSet":
        idx = np.asarray(idx, dtype=int)
        w = self.weights[idx]
        return ScenarioSet(self.values[idx], self.zones, self.provenance, self.seed, w / w.sum())


def dirichlet_mix(base: np.ndarray, n: int, alpha: float, seed: int, zones: Sequence[str]) -> ScenarioSet:
    """Convex combinations of K base trajectories with Dirichlet(alpha) weights."""
    base = np.asarray(base, dtype=float)
    if base.ndim != 4 or base.shape[0] == 0:
        raise ValueError("base set is empty or not shaped (K, T, zones, 3)")
    if base.shape[0] < 2:
        raise ValueError("need at least two base trajectories")
    if n < 1 or not alpha > 0:
        raise ValueError("need n >= 1 and alpha > 0")
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.full(base.shape[0], alpha), size=n)
    # tiny-alpha draws can underflow to an all-zero row; fall back to the argmax vertex
    bad = ~np.isfinite(w).all(axis=1) | (w.sum(axis=1) <= 0)
    if bad.any():
        w[bad] = 0.0
        w[bad, rng.integers(0, base.shape[0], bad.sum())] = 1.0
    w /= w.sum(axis=1, keepdims=True)
    values = np.einsum("nk,ktzc->ntzc", w, base)
    # convex combinations can overshoot the hull by rounding only
    values = np.clip(values, base.min(axis=0), base.max(axis=0))
    return ScenarioSet(values, tuple(zones), Provenance.DA, seed, mix_weights=w)


def effective_support(mix_weights: np.ndarray, threshold: float = 0.01) -> np.ndarray:
    return (np.asarray(mix_weights) > threshold).sum(axis=1)


def gbm_multipliers(n_paths: int, n_steps: int, n_channels: int, rel_sigma_1h: float, seed: int) -> np.ndarray:
    """Drift-corrected GBM multiplier paths, shape (n_paths, n_steps, n_channels).

    Entry ``t`` is the multiplier after ``t + 1`` steps (the path starts at 1).
    """
    if not 0 <= rel_sigma_1h < 0.5:
        raise ValueError("rel_sigma_1h must lie in [0, 0.5)")
    sigma = rel_sigma_1h / np.sqrt(STEPS_PER_HOUR)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((n_paths, n_steps, n_channels))
    return np.exp(np.cumsum(sigma * eps - 0.5 * sigma**2, axis=1))


def gbm_short_term(
    actual: np.ndarray, n: int, rel_sigma_1h: float, seed: int, zones: Sequence[str]
) -> ScenarioSet:
    """Perturb a (12, zones, 3) actual trajectory with independent GBM noise per channel."""
    actual = np.asarray(actual, dtype=float)
    if actual.ndim != 3 or actual.shape[0] != STEPS_PER_HOUR or actual.shape[2] != 3:
        raise ValueError(f"actual trajectory must be ({STEPS_PER_HOUR}, zones, 3), got {actual.shape}")
    if n < 1:
        raise ValueError("need at least one scenario")
    steps, nz, _ = actual.shape
    mult = gbm_multipliers(n, steps, nz * 3, rel_sigma_1h, seed).reshape(n, steps, nz, 3)
    values = np.where(actual > 0, actual[None] * mult, actual[None])
    return ScenarioSet(np.clip(values, 0.0, None), tuple(zones), Provenance.ST, seed)


def augment_unsafe(base: ScenarioSet, stress_factors: Sequence[float], seed: int | None = None) -> ScenarioSet:
    """Net-load stressed copies of ``base``: load x(1+f), renewables /(1+f).

    The result is tagged Augmented and is only valid as training data.
    """
    factors = [float(f) for f in stress_factors]
    if not factors or any(f < 0 for f in factors):
        raise ValueError("stress factors must be nonnegative")
    scale = np.array([[1.0 + f, 1.0 / (1.0 + f), 1.0 / (1.0 + f)] for f in factors])  # (F, 3)
    values = base.values[:, None] * scale[None, :, None, None, :]
    values = values.reshape((-1,) + base.values.shape[1:])
    return ScenarioSet(values, base.zones, Provenance.AUGMENTED, seed)


def write_scenarios(ss: ScenarioSet, path_csv: str | Path) -> None:
    """``scenario_id,step,zone,load,wind,solar`` CSV plus a ``.json`` sidecar."""
    path_csv = Path(path_csv)
    n, T, nz, _ = ss.values.shape
    frame = pd.DataFrame(
        {
            "scenario_id": np.repeat(np.arange(n), T * nz),
            "step": np.tile(np.repeat(np.arange(T), nz), n),
            "zone": np.tile(np.asarray(ss.zones, dtype=object), n * T),
        }
    )
    for c, name in enumerate(CHANNELS):
        frame[name] = ss.values[..., c].ravel()
    frame.to_csv(path_csv, index=False, lineterminator="\n")
    sidecar = {
        "provenance": ss.provenance.value,
        "seed": ss.seed,
        "zones": list(ss.zones),
        "weights": ss.weights.tolist(),
    }
    path_csv.with_suffix(".json").write_text(json.dumps(sidecar) + "\n", encoding="utf-8")


def read_scenarios(path_csv: str | Path) -> ScenarioSet:
    path_csv = Path(path_csv)
    meta = json.loads(path_csv.with_suffix(".json").read_text(encoding="utf-8"))
    zones = tuple(meta["zones"])
    frame = pd.read_csv(path_csv, dtype={"zone": str})
    ids = np.sort(frame["scenario_id"].unique())
    arrays = [
        _frame_to_array(group, zones, f"{path_csv}#{sid}") for sid, group in frame.groupby("scenario_id", sort=True)
    ]
    if not np.array_equal(ids, np.arange(len(ids))):
        raise ValueError(f"{path_csv}: scenario ids must be 0..N-1")
    return ScenarioSet(np.stack(arrays), zones, Provenance(meta["provenance"]), meta.get("seed"), meta["weights"])
