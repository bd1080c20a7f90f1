"""Run configuration for the pipeline commands, stored as JSON."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .fixtures import STRESS_WINDOWS
from .surrogate.forest import RFOptions
from .surrogate.nn import NNOptions


@dataclass
class RunConfig:
    out: str = "runs/desk"
    system: str | None = None  # defaults to the generated desk fixture
    seed: int = 0
    n_base_days: int = 20
    stress_tuning: bool = True
    stress_margin: float = 0.10
    normal_margin: float = 0.40
    da_n: int = 2500
    dirichlet_alpha: float = 0.01
    alpha: float = 5.0
    train_frac: float = 0.7
    augment_factors: list[float] = field(default_factory=lambda: [0.04, 0.08])
    augment_n: int = 100  # riskiest training scenarios that get stressed copies
    rf: dict = field(default_factory=lambda: asdict(RFOptions()))
    nn: dict = field(default_factory=lambda: asdict(NNOptions()))
    st_n: int = 1000
    rel_sigma_1h: float = 0.025
    horizon: int = 12
    rt_every: int = 3  # steps between real-time assessments
    stress_windows: list[list[int]] = field(default_factory=lambda: [list(w) for w in STRESS_WINDOWS])
    timing_n: int = 1000
    timing_repeats: int = 5
    parallelism: int = 1

    def __post_init__(self):
        for name in ("da_n", "st_n", "n_base_days", "horizon", "rt_every", "timing_n", "timing_repeats", "parallelism"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 < self.alpha <= 100:
            raise ValueError("alpha must lie in (0, 100]")
        if self.augment_n < 0:
            raise ValueError("augment_n must be >= 0")
        for a, b in self.stress_windows:
            if not 0 <= a < b <= 24:
                raise ValueError(f"bad stress window {a}-{b}")

    @property
    def rf_options(self) -> RFOptions:
        return RFOptions(**self.rf)

    @property
    def nn_options(self) -> NNOptions:
        return NNOptions(**self.nn)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        doc = dict(doc)
        for key, opts in (("rf", RFOptions), ("nn", NNOptions)):
            if key in doc:
                doc[key] = asdict(opts(**doc[key]))
        return cls(**doc)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
