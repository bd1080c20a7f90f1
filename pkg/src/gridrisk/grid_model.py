"""Zonal power-system data model, commitment schedules and file IO."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

STEPS_PER_HOUR = 12
HOURS = 24
STEPS_PER_DAY = STEPS_PER_HOUR * HOURS
CHANNELS = ("load", "wind", "solar")


class GridDataError(ValueError):
    pass


class ParseError(GridDataError):
    pass


class ValidationError(GridDataError):
    pass


@dataclass(frozen=True)
class Generator:
    id: str
    zone: str
    p_min: float
    p_max: float
    ramp_rate: float
    energy_cost: float
    reg_capable: bool = False

    def validate(self) -> None:
        if not (0 <= self.p_min <= self.p_max):
            raise ValidationError(
                f"generator {self.id}: need 0 <= p_min <= p_max, got p_min={self.p_min}, p_max={self.p_max}"
            )
        if not self.ramp_rate > 0:
            raise ValidationError(f"generator {self.id}: ramp_rate must be positive, got {self.ramp_rate}")


@dataclass(frozen=True)
class SystemModel:
    generators: tuple[Generator, ...]
    zones: tuple[str, ...]
    zonal_export_limit: Mapping[str, float]
    mrr_reg: float = 500.0
    mrr_op: float = 2250.0
    voll: float = 3500.0
    reserve_penalty: float = 1000.0

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "zonal_export_limit", dict(self.zonal_export_limit))
        self.validate()

    def validate(self) -> None:
        if not self.zones:
            raise ValidationError("system needs at least one zone")
        if len(set(self.zones)) != len(self.zones):
            raise ValidationError("zone ids must be unique")
        if not self.generators:
            raise ValidationError("system needs at least one generator")
        ids = set()
        for g in self.generators:
            if g.id in ids:
                raise ValidationError(f"duplicate generator id {g.id}")
            ids.add(g.id)
            g.validate()
            if g.zone not in self.zones:
                raise ValidationError(f"generator {g.id}: zone {g.zone!r} is not a system zone")
        for z in self.zones:
            lim = self.zonal_export_limit.get(z)
            if lim is None or not lim >= 0:
                raise ValidationError(f"zone {z}: export limit missing or negative")
        if not self.mrr_reg <= self.mrr_op:
            raise ValidationError(f"mrr_reg ({self.mrr_reg}) must not exceed mrr_op ({self.mrr_op})")
        if not self.voll > 0:
            raise ValidationError("voll must be positive")
        if not self.reserve_penalty > 0:
            raise ValidationError("reserve_penalty must be positive")

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(g, name) for g in self.generators], dtype=float)

    def zone_index(self) -> np.ndarray:
        lookup = {z: i for i, z in enumerate(self.zones)}
        return np.array([lookup[g.zone] for g in self.generators], dtype=int)

    def to_dict(self) -> dict:
        return {
            "zones": list(self.zones),
            "generators": [asdict(g) for g in self.generators],
            "export_limits": {z: self.zonal_export_limit[z] for z in self.zones},
            "mrr_reg": self.mrr_reg,
            "mrr_op": self.mrr_op,
            "voll": self.voll,
            "reserve_penalty": self.reserve_penalty,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SystemModel":
        try:
            gens = tuple(
                Generator(
                    id=str(g["id"]),
                    zone=str(g["zone"]),
                    p_min=float(g["p_min"]),
                    p_max=float(g["p_max"]),
                    ramp_rate=float(g["ramp_rate"]),
                    energy_cost=float(g["energy_cost"]),
                    reg_capable=bool(g.get("reg_capable", False)),
                )
                for g in doc["generators"]
            )
            return cls(
                generators=gens,
                zones=tuple(str(z) for z in doc["zones"]),
                zonal_export_limit={str(k): float(v) for k, v in doc["export_limits"].items()},
                mrr_reg=float(doc.get("mrr_reg", 500.0)),
                mrr_op=float(doc.get("mrr_op", 2250.0)),
                voll=float(doc.get("voll", 3500.0)),
                reserve_penalty=float(doc.get("reserve_penalty", 1000.0)),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"system document is missing or mistypes a field: {exc}") from exc


def load_system(path: str | Path) -> SystemModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top-level JSON value must be an object")
    return SystemModel.from_dict(doc)


def save_system(system: SystemModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(system.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class CommitmentSchedule:
    on_status: np.ndarray  # (24, n_generators) bool

    def __post_init__(self):
        on = np.array(self.on_status, dtype=bool)
        if on.ndim != 2 or on.shape[0] != HOURS:
            raise ValidationError(f"commitment schedule needs {HOURS} rows, got shape {on.shape}")
        on.setflags(write=False)
        object.__setattr__(self, "on_status", on)

    def check(self, system: SystemModel) -> None:
        if self.on_status.shape[1] != system.n_generators:
            raise ValidationError(
                f"schedule has {self.on_status.shape[1]} columns, system has {system.n_generators} generators"
            )

    def hour(self, h: int) -> np.ndarray:
        return self.on_status[h]

    def at_step(self, step: int) -> np.ndarray:
        return self.on_status[step // STEPS_PER_HOUR]

    def __eq__(self, other):
        return isinstance(other, CommitmentSchedule) and np.array_equal(self.on_status, other.on_status)

    __hash__ = None


def save_schedule(schedule: CommitmentSchedule, system: SystemModel, path: str | Path) -> None:
    doc = {
        "generators": [g.id for g in system.generators],
        "on_status": schedule.on_status.astype(int).tolist(),
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_schedule(path: str | Path, system: SystemModel | None = None) -> CommitmentSchedule:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        sched = CommitmentSchedule(np.array(doc["on_status"], dtype=bool))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: malformed schedule ({exc})") from exc
    if system is not None:
        sched.check(system)
        if doc.get("generators") and list(doc["generators"]) != [g.id for g in system.generators]:
            raise ValidationError(f"{path}: generator order does not match the system file")
    return sched


def priority_list_commitment(
    system: SystemModel, hourly_peak_load: Sequence[float], margin: float | Sequence[float]
) -> CommitmentSchedule:
    """Greedy merit-order commitment covering ``(1 + margin) * peak`` per hour.

    ``margin`` may be a scalar or one value per hour.
    """
    peaks = np.asarray(hourly_peak_load, dtype=float)
    margins = np.broadcast_to(np.asarray(margin, dtype=float), peaks.shape)
    if peaks.shape != (HOURS,):
        raise ValidationError(f"need {HOURS} hourly peaks, got {peaks.shape}")
    if np.any(peaks < 0) or np.any(margins < 0):
        raise ValidationError("peaks and margin must be nonnegative")
    costs = system.column("energy_cost")
    pmax = system.column("p_max")
    order = np.argsort(costs, kind="stable")
    on = np.zeros((HOURS, system.n_generators), dtype=bool)
    for h in range(HOURS):
        target = (1.0 + margins[h]) * peaks[h]
        cap = 0.0
        for g in order:
            if cap >= target:
                break
            on[h, g] = True
            cap += pmax[g]
    return CommitmentSchedule(on)


@dataclass(frozen=True)
class Realization:
    """Zonal load, wind and solar (MW) at one 5-minute step."""

    zonal_load: Mapping[str, float]
    zonal_wind: Mapping[str, float]
    zonal_solar: Mapping[str, float]
    zones: tuple[str, ...] = field(default=())

    def __post_init__(self):
        zones = tuple(self.zones) or tuple(self.zonal_load)
        object.__setattr__(self, "zones", zones)
        for name in ("zonal_load", "zonal_wind", "zonal_solar"):
            values = getattr(self, name)
            for z in zones:
                v = values.get(z)
                if v is None:
                    raise ValidationError(f"{name} missing zone {z}")
                if not (v >= 0 and math.isfinite(v)):
                    raise ValidationError(f"{name}[{z}] must be finite and nonnegative, got {v}")

    def as_array(self) -> np.ndarray:
        """(zones, 3) array in [load, wind, solar] column order."""
        return np.array(
            [[self.zonal_load[z], self.zonal_wind[z], self.zonal_solar[z]] for z in self.zones], dtype=float
        )

    @classmethod
    def from_array(cls, arr: np.ndarray, zones: Sequence[str]) -> "Realization":
        arr = np.asarray(arr, dtype=float)
        zones = tuple(zones)
        return cls(
            {z: float(arr[i, 0]) for i, z in enumerate(zones)},
            {z: float(arr[i, 1]) for i, z in enumerate(zones)},
            {z: float(arr[i, 2]) for i, z in enumerate(zones)},
            zones,
        )


def features_of(realization: Realization) -> np.ndarray:
    return feature_matrix(realization.as_array())


def feature_matrix(values: np.ndarray) -> np.ndarray:
    """Vectorised features over a trailing (zones, 3) axis pair.

    Layout: total load, total wind, total solar, then per-zone load block,
    wind block and solar block in zone order.
    """
    values = np.asarray(values, dtype=float)
    totals = values.sum(axis=-2)
    per_zone = np.swapaxes(values, -1, -2).reshape(values.shape[:-2] + (-1,))
    return np.concatenate([totals, per_zone], axis=-1)


def feature_names(zones: Sequence[str]) -> list[str]:
    names = [f"total_{c}" for c in CHANNELS]
    names += [f"{c}_{z}" for c in CHANNELS for z in zones]
    return names


def write_timeseries(values: np.ndarray, zones: Sequence[str], path: str | Path) -> None:
    """Write one (steps, zones, 3) trajectory as ``step,zone,load,wind,solar``."""
    values = np.asarray(values, dtype=float)
    steps, nz, _ = values.shape
    frame = pd.DataFrame(
        {
            "step": np.repeat(np.arange(steps), nz),
            "zone": np.tile(np.asarray(zones, dtype=object), steps),
            "load": values[:, :, 0].ravel(),
            "wind": values[:, :, 1].ravel(),
            "solar": values[:, :, 2].ravel(),
        }
    )
    frame.to_csv(path, index=False, lineterminator="\n")


def read_timeseries(path: str | Path, zones: Sequence[str]) -> np.ndarray:
    try:
        frame = pd.read_csv(path, dtype={"zone": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    missing = {"step", "zone", *CHANNELS} - set(frame.columns)
    if missing:
        raise ParseError(f"{path}: missing columns {sorted(missing)}")
    return _frame_to_array(frame, zones, str(path))


def _frame_to_array(frame: pd.DataFrame, zones: Sequence[str], where: str) -> np.ndarray:
    zones = list(zones)
    if set(frame["zone"]) != set(zones):
        raise ValidationError(f"{where}: zone set {sorted(set(frame['zone']))} does not match system {zones}")
    steps = int(frame["step"].max()) + 1
    if len(frame) != steps * len(zones) or frame.duplicated(["step", "zone"]).any():
        raise ValidationError(f"{where}: expected one row per (step, zone) for steps 0..{steps - 1}")
    zi = frame["zone"].map({z: i for i, z in enumerate(zones)}).to_numpy()
    out = np.empty((steps, len(zones), 3))
    out[frame["step"].to_numpy(), zi] = frame[list(CHANNELS)].to_numpy(dtype=float)
    if np.any(out < 0) or not np.all(np.isfinite(out)):
        raise ValidationError(f"{where}: load/wind/solar must be finite and nonnegative")
    return out
