"""Synthetic 3-zone, 20-generator desk system and its base days.

The base days stand in for historical analogue days: smooth diurnal load
with morning and evening peaks, day-level wind and cloud regimes, and
low-frequency noise. The stressed commitment deliberately under-commits
the morning and evening peaks so that reserve shortage and load shedding
both occur with moderate probability there.
"""

from __future__ import annotations

import numpy as np

from .grid_model import (
    HOURS,
    STEPS_PER_DAY,
    STEPS_PER_HOUR,
    CommitmentSchedule,
    Generator,
    SystemModel,
    priority_list_commitment,
)

DESK_ZONES = ("north", "centre", "south")

# stress windows in hours [start, end): 5am-11am and 4pm-8pm
STRESS_WINDOWS = ((5, 11), (16, 20))

_LOAD_SHARE = np.array([0.45, 0.35, 0.20])
_WIND_CAP = np.array([7500.0, 4000.0, 1500.0])
_SOLAR_CAP = np.array([1500.0, 3000.0, 6000.0])


def desk_system() -> SystemModel:
    gens = []
    # id, zone, p_min, p_max, ramp, cost, reg
    table = [
        ("nuc1", "north", 4000, 6000, 100, 8.0, False),
        ("nuc2", "centre", 4000, 6000, 100, 8.5, False),
        ("nuc3", "south", 4000, 6000, 100, 9.0, False),
        ("coal1", "north", 1000, 3500, 300, 20.0, True),
        ("coal2", "north", 1000, 3500, 300, 22.0, True),
        ("coal3", "centre", 1000, 3500, 300, 24.0, True),
        ("coal4", "centre", 1000, 3500, 300, 26.0, True),
        ("coal5", "south", 1000, 3500, 300, 28.0, True),
        ("coal6", "south", 1000, 3500, 300, 30.0, True),
        ("ccgt1", "north", 600, 2200, 350, 38.0, True),
        ("ccgt2", "north", 600, 2200, 350, 40.0, True),
        ("ccgt3", "centre", 600, 2200, 350, 42.0, True),
        ("ccgt4", "centre", 600, 2200, 350, 45.0, True),
        ("ccgt5", "south", 600, 2200, 350, 48.0, True),
        ("ccgt6", "south", 600, 2200, 350, 51.0, True),
        ("ccgt7", "north", 600, 2200, 350, 54.0, True),
        ("peak1", "north", 200, 1500, 500, 90.0, True),
        ("peak2", "centre", 200, 1500, 500, 100.0, True),
        ("peak3", "south", 200, 1500, 500, 115.0, True),
        ("peak4", "centre", 200, 1500, 500, 130.0, True),
    ]
    for gid, zone, pmin, pmax, ramp, cost, reg in table:
        gens.append(Generator(gid, zone, float(pmin), float(pmax), float(ramp), cost, reg))
    return SystemModel(
        generators=tuple(gens),
        zones=DESK_ZONES,
        zonal_export_limit={"north": 12000.0, "centre": 10000.0, "south": 7500.0},
        mrr_reg=500.0,
        mrr_op=2250.0,
        voll=3500.0,
        reserve_penalty=1000.0,
    )


def _bump(t: np.ndarray, centre: float, width: float) -> np.ndarray:
    return np.exp(-(((t - centre) / width) ** 2))


def _plateau(t: np.ndarray, start: float, end: float, soft: float = 1.0) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-(t - start) / soft)) - 1.0 / (1.0 + np.exp(-(t - end) / soft))


def _slow_noise(rng: np.random.Generator, t: np.ndarray, amp: float, n_terms: int = 3) -> np.ndarray:
    out = np.zeros_like(t)
    for k in range(1, n_terms + 1):
        out += rng.normal(0, amp / np.sqrt(n_terms)) * np.sin(2 * np.pi * k * t / 24 + rng.uniform(0, 2 * np.pi))
    return out


def base_days(k: int = 20, seed: int = 0, zones: tuple[str, ...] = DESK_ZONES) -> np.ndarray:
    """(k, 288, zones, 3) array of load/wind/solar base trajectories."""
    if len(zones) != 3:
        raise ValueError("desk base days are defined for three zones")
    rng = np.random.default_rng(seed)
    t = np.arange(STEPS_PER_DAY) / STEPS_PER_HOUR
    out = np.empty((k, STEPS_PER_DAY, 3, 3))
    for d in range(k):
        level = rng.uniform(0.93, 1.07)
        morning = rng.uniform(0.75, 1.25)
        evening = rng.uniform(0.75, 1.25)
        system_load = (
            24000.0
            + 7500.0 * morning * _bump(t, 8.5, 1.8)
            + 6500.0 * _plateau(t, 7.0, 22.0)
            + 10000.0 * evening * _bump(t, 19.0, 1.6)
        ) * level
        system_load *= 1.0 + _slow_noise(rng, t, 0.015)
        share = _LOAD_SHARE * rng.uniform(0.95, 1.05, 3)
        share /= share.sum()
        out[d, :, :, 0] = system_load[:, None] * share[None, :]

        cf = rng.beta(2.0, 3.0)
        wind_shape = np.clip(cf + _slow_noise(rng, t, 0.12, 2), 0.02, 0.95)
        zone_cf = np.clip(wind_shape[:, None] * rng.uniform(0.8, 1.2, 3)[None, :], 0.0, 1.0)
        out[d, :, :, 1] = zone_cf * _WIND_CAP[None, :]

        cloud = rng.uniform(0.3, 1.0)
        sun = np.clip(np.sin(np.pi * (t - 6.5) / 13.0), 0.0, None) ** 1.5
        out[d, :, :, 2] = (sun * cloud)[:, None] * _SOLAR_CAP[None, :] * rng.uniform(0.85, 1.0, 3)[None, :]
    return np.clip(out, 0.0, None)


def hourly_peak_net_load(days: np.ndarray) -> np.ndarray:
    """Hourly maximum of the mean net-load trajectory over base days."""
    net = days[..., 0].sum(-1) - days[..., 1].sum(-1) - days[..., 2].sum(-1)
    mean = net.mean(axis=0)
    return mean.reshape(HOURS, STEPS_PER_HOUR).max(axis=1)


def stress_hours(windows=STRESS_WINDOWS) -> np.ndarray:
    hours = np.zeros(HOURS, dtype=bool)
    for a, b in windows:
        hours[a:b] = True
    return hours


def desk_schedule(
    system: SystemModel,
    days: np.ndarray,
    stressed: bool = True,
    stress_margin: float = 0.10,
    normal_margin: float = 0.40,
    windows=STRESS_WINDOWS,
) -> CommitmentSchedule:
    """Merit-order commitment with gradual, ramp-covered shutdowns.

    Units stay online through stress windows. Outside them at most one unit
    (the most expensive) leaves per hour, and only if the units that remain
    can ramp together by at least its capacity within one step, so hour
    boundaries do not shed load by themselves.
    """
    peaks = hourly_peak_net_load(days)
    if not stressed:
        return priority_list_commitment(system, peaks, 10.0)
    stress = stress_hours(windows)
    target = priority_list_commitment(system, peaks, np.where(stress, stress_margin, normal_margin)).on_status
    cost = system.column("energy_cost")
    ramp = system.column("ramp_rate")
    pmax = system.column("p_max")
    on = target.copy()
    for h in range(1, HOURS):
        on[h] = target[h] | on[h - 1]
        leaving = np.flatnonzero(on[h - 1] & ~target[h])
        if stress[h] or leaving.size == 0:
            continue
        g = leaving[np.argmax(cost[leaving])]
        stay = on[h].copy()
        stay[g] = False
        if ramp[stay].sum() >= pmax[g]:
            on[h] = stay
    return CommitmentSchedule(on)
