"""The five pipeline commands: fixtures, day-ahead assessment, training,
real-time assessment and the plot-data report.

Every command reads and writes plain CSV/JSON under ``RunConfig.out``; see
docs/formats.md for the file layouts.
"""

from __future__ import annotations

import json
import logging
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .config import RunConfig
from .fixtures import DESK_ZONES, base_days, desk_schedule, desk_system
from .grid_model import (
    STEPS_PER_DAY,
    STEPS_PER_HOUR,
    load_schedule,
    load_system,
    read_timeseries,
    save_schedule,
    save_system,
    write_timeseries,
)
from .risk import OracleEvaluator, RiskProfile, propagate, risk_profile, scenario_consequence
from .scenarios import augment_unsafe, dirichlet_mix, gbm_short_term, read_scenarios, write_scenarios
from .sced import DispatchState, Simulator, initial_dispatch
from .surrogate import (
    MODEL_KINDS,
    HalParams,
    SurrogateBank,
    SurrogateEvaluator,
    TrainOptions,
    ValidationReport,
    build_datasets,
    default_hal_params,
    jit_train,
    read_corpus,
    scenario_split,
    select_model,
    write_corpus,
)
from .surrogate.hal import ABOVE, hal_loss

log = logging.getLogger("gridrisk")

CASES = ("high", "medium", "low")
RISK_QOIS = ("load_shed", "reg_reserve", "op_reserve")
FLOAT_FMT = "%.10g"


class MissingInputError(FileNotFoundError):
    pass


@dataclass(frozen=True)
class RunPaths:
    root: Path

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    @property
    def fixtures(self) -> Path:
        return self.root / "fixtures"

    @property
    def da(self) -> Path:
        return self.root / "da"

    @property
    def train(self) -> Path:
        return self.root / "train"

    @property
    def rt(self) -> Path:
        return self.root / "rt"

    @property
    def report(self) -> Path:
        return self.root / "report"


def _require(path: Path, command: str) -> Path:
    if not path.exists():
        raise MissingInputError(f"{path} not found: run `gridrisk {command}` first")
    return path


def _csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n", float_format=FLOAT_FMT)


def _json(doc, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# -- fixtures ------------------------------------------------------------------


def cmd_gen_fixtures(cfg: RunConfig) -> list[Path]:
    p = RunPaths(Path(cfg.out))
    (p.fixtures / "base_days").mkdir(parents=True, exist_ok=True)
    system = desk_system()
    days = base_days(cfg.n_base_days, cfg.seed, DESK_ZONES)
    schedule = desk_schedule(system, days, cfg.stress_tuning, cfg.stress_margin, cfg.normal_margin, cfg.stress_windows)
    written = [p.fixtures / "desk3z.json", p.fixtures / "schedule.json"]
    save_system(system, written[0])
    save_schedule(schedule, system, written[1])
    for k, day in enumerate(days):
        path = p.fixtures / "base_days" / f"day_{k:02d}.csv"
        write_timeseries(day, DESK_ZONES, path)
        written.append(path)
    return written


def load_inputs(cfg: RunConfig):
    p = RunPaths(Path(cfg.out))
    system_path = Path(cfg.system) if cfg.system else p.fixtures / "desk3z.json"
    system = load_system(_require(system_path, "gen-fixtures"))
    schedule = load_schedule(_require(p.fixtures / "schedule.json", "gen-fixtures"), system)
    day_files = sorted((p.fixtures / "base_days").glob("day_*.csv"))
    if not day_files:
        raise MissingInputError(f"no base days under {p.fixtures}: run `gridrisk gen-fixtures` first")
    days = np.stack([read_timeseries(f, system.zones) for f in day_files])
    return system, schedule, days


# -- day-ahead assessment ------------------------------------------------------


def cmd_da_assess(cfg: RunConfig) -> RiskProfile:
    p = RunPaths(Path(cfg.out))
    system, schedule, days = load_inputs(cfg)
    p.da.mkdir(parents=True, exist_ok=True)
    scen = dirichlet_mix(days, cfg.da_n, cfg.dirichlet_alpha, cfg.seed, system.zones)
    oracle = OracleEvaluator(system, schedule)
    qoi = propagate(oracle, scen, cfg.parallelism)
    profile = risk_profile(qoi, system, cfg.alpha)
    profile.write(
        p.da / "risk_profile.csv",
        {"da_n": cfg.da_n, "seed": cfg.seed, "evaluator": "oracle", "provenance": scen.provenance.value},
    )
    write_scenarios(scen, p.da / "scenarios.csv")
    write_corpus(qoi.values, p.da / "corpus.csv")

    # stressed copies of the riskiest training scenarios; never used for risk
    train = scenario_split(cfg.da_n, cfg.seed, cfg.train_frac)
    cons = scenario_consequence(qoi.values, system)
    idx = np.flatnonzero(train)
    idx = idx[np.argsort(-cons[idx], kind="stable")][: cfg.augment_n]
    aug_paths = [p.da / "augmented_scenarios.csv", p.da / "augmented_corpus.csv"]
    if idx.size and cfg.augment_factors:
        aug = augment_unsafe(scen.subset(idx), cfg.augment_factors, cfg.seed)
        aug_q = oracle.evaluate(aug.values)
        write_scenarios(aug, aug_paths[0])
        write_corpus(aug_q, aug_paths[1])
        _json({"source_scenarios": idx.tolist(), "factors": cfg.augment_factors}, p.da / "augmented_sources.json")
    else:
        for path in aug_paths:
            path.unlink(missing_ok=True)
    return profile


# -- training ------------------------------------------------------------------


def hal_settings(system) -> list[HalParams]:
    return default_hal_params(system.mrr_reg, system.mrr_op)


def load_datasets(cfg: RunConfig):
    p = RunPaths(Path(cfg.out))
    scen = read_scenarios(_require(p.da / "scenarios.csv", "da-assess"))
    qoi = read_corpus(_require(p.da / "corpus.csv", "da-assess"))
    aug_q = aug_v = None
    if (p.da / "augmented_corpus.csv").exists():
        aug_q = read_corpus(p.da / "augmented_corpus.csv")
        aug_v = read_scenarios(p.da / "augmented_scenarios.csv").values
    min_scen = min(100, qoi.shape[0])
    return build_datasets(qoi, scen.values, aug_q, aug_v, cfg.seed, cfg.train_frac, min_scen), scen, qoi


def validation_table(reports: list[ValidationReport]) -> pd.DataFrame:
    """One row per (QoI, model); unsafe cells are empty where no unsafe rows exist."""
    rows = []
    for name in ("cost", "load_shed", "reg_reserve", "op_reserve"):
        for r in reports:
            v = r.qoi[name]
            rows.append((name, r.model_id, v.safe_nmae, v.unsafe_nmae, v.n_safe, v.n_unsafe, v.nhal))
    return pd.DataFrame(rows, columns=["qoi", "model", "safe_nmae", "unsafe_nmae", "n_safe", "n_unsafe", "nhal"])


def cmd_train(cfg: RunConfig, kinds=MODEL_KINDS) -> dict:
    p = RunPaths(Path(cfg.out))
    system, _, _ = load_inputs(cfg)
    datasets, _, _ = load_datasets(cfg)
    p.train.mkdir(parents=True, exist_ok=True)
    options = TrainOptions(cfg.rf_options, cfg.nn_options, hal_settings(system))
    reports, failures, timings = [], {}, {}
    for kind in kinds:
        t0 = time.perf_counter()
        try:
            bank = jit_train(datasets, kind, options, cfg.seed, system.zones, cfg.parallelism)
        except Exception as exc:  # keep going with the other model families
            log.error("training %s failed: %s", kind, exc)
            failures[kind] = str(exc)
            continue
        timings[kind] = time.perf_counter() - t0
        bank.save(p.train / kind)
        reports.append(bank.report())
    if not reports:
        raise RuntimeError(f"every model family failed to train: {failures}")
    _csv(validation_table(reports), p.train / "validation.csv")
    selected = select_model(reports)
    manifest = {
        "selected": selected,
        "seed": cfg.seed,
        "models": [r.model_id for r in reports],
        "failures": failures,
        "train_seconds": timings,
    }
    _json(manifest, p.train / "manifest.json")
    return manifest


# -- real-time assessment --------------------------------------------------------


def case_scenarios(qoi: np.ndarray, system, cfg: RunConfig) -> dict[str, int]:
    """Held-out scenario at the median rank of each consequence third."""
    held_out = np.flatnonzero(~scenario_split(qoi.shape[0], cfg.seed, cfg.train_frac))
    if held_out.size < 3:
        raise ValueError("need at least three held-out scenarios to pick risk cases")
    cons = scenario_consequence(qoi[held_out], system)
    ranked = held_out[np.argsort(-cons, kind="stable")]
    thirds = np.array_split(ranked, 3)
    return {case: int(third[len(third) // 2]) for case, third in zip(CASES, thirds)}


def window_starts(cfg: RunConfig) -> list[int]:
    starts = []
    for a, b in cfg.stress_windows:
        for s in range(a * STEPS_PER_HOUR, b * STEPS_PER_HOUR, cfg.rt_every):
            if s + cfg.horizon <= STEPS_PER_DAY:
                starts.append(s)
    return starts


def _profile_rows(profile: RiskProfile, evaluator: str, start: int) -> pd.DataFrame:
    frame = profile.to_frame()
    frame.insert(0, "evaluator", evaluator)
    frame.insert(0, "window_start", start)
    return frame


def _mean_rows(q: np.ndarray, evaluator: str, start: int) -> pd.DataFrame:
    mean = q.mean(axis=0)
    T = mean.shape[0]
    names = ("cost",) + RISK_QOIS
    return pd.DataFrame(
        {
            "window_start": start,
            "evaluator": evaluator,
            "step": np.repeat(start + np.arange(T), 4),
            "qoi": np.tile(names, T),
            "mean": mean.ravel(),
        }
    )


def risk_errors(window_risk: pd.DataFrame, case: str) -> pd.DataFrame:
    """MAE and HAL (threshold 0, any positive risk is adverse) of level-3 window risk."""
    hal = HalParams(qbar=0.0, direction=ABOVE)
    wide = window_risk.pivot_table(index=["window_start", "qoi"], columns="evaluator", values="level3")
    rows = []
    for qoi in RISK_QOIS:
        sub = wide.xs(qoi, level="qoi")
        truth = sub["oracle"].to_numpy()
        for model in [c for c in sub.columns if c != "oracle"]:
            est = sub[model].to_numpy()
            rows.append((case, qoi, model, float(np.mean(np.abs(est - truth))), float(np.mean(hal_loss(truth, est, hal)))))
        rows.append((case, qoi, "mean_risk", float(truth.mean()), float("nan")))
    return pd.DataFrame(rows, columns=["case", "qoi", "model", "mae", "hal"])


def _time_per_scenario(evaluator, values: np.ndarray, repeats: int) -> float:
    evaluator.evaluate(values[: min(5, len(values))])  # warm caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        evaluator.evaluate(values)
        times.append(time.perf_counter() - t0)
    return statistics.median(times) / len(values)


def cmd_rt_assess(cfg: RunConfig, case: str | None = None) -> dict:
    p = RunPaths(Path(cfg.out))
    system, schedule, _ = load_inputs(cfg)
    manifest = json.loads(_require(p.train / "manifest.json", "train").read_text())
    banks = {kind: SurrogateBank.load(p.train / kind) for kind in manifest["models"]}
    scen = read_scenarios(_require(p.da / "scenarios.csv", "da-assess"))
    qoi = read_corpus(_require(p.da / "corpus.csv", "da-assess"))
    if cfg.horizon != STEPS_PER_HOUR:
        raise ValueError(f"real-time horizon must be {STEPS_PER_HOUR} steps")
    picks = case_scenarios(qoi, system, cfg)
    cases = [case] if case else list(CASES)
    results = {}
    for c in cases:
        if c not in picks:
            raise ValueError(f"unknown case {c!r}; expected one of {CASES}")
        results[c] = _assess_case(cfg, p, system, schedule, scen.values[picks[c]], c, picks[c], banks, manifest)
    tables = [pd.read_csv(p.rt / c / "errors.csv") for c in CASES if (p.rt / c / "errors.csv").exists()]
    _csv(pd.concat(tables, ignore_index=True), p.rt / "error_table.csv")
    return results


def _assess_case(cfg, p, system, schedule, actual_day, case, scenario_id, banks, manifest) -> dict:
    out = p.rt / case
    out.mkdir(parents=True, exist_ok=True)
    case_idx = CASES.index(case)
    sim = Simulator(system, schedule)
    y_init = initial_dispatch(system, schedule.at_step(0), actual_day[0])
    actual_dispatch = sim.run(y_init, actual_day).dispatch

    profiles, means, window_risk = [], [], []
    first = None
    for start in window_starts(cfg):
        try:
            st = gbm_short_term(
                actual_day[start : start + cfg.horizon],
                cfg.st_n,
                cfg.rel_sigma_1h,
                _seed(cfg.seed, case_idx, start),
                system.zones,
            )
            y0 = DispatchState(actual_dispatch[start - 1]) if start else y_init
            evaluators = {"oracle": OracleEvaluator(system, schedule, y0, start)}
            evaluators.update({k: SurrogateEvaluator(b, start) for k, b in banks.items()})
            for name, ev in evaluators.items():
                q = propagate(ev, st, cfg.parallelism if name == "oracle" else 1)
                prof = risk_profile(q, system, cfg.alpha, start)
                profiles.append(_profile_rows(prof, name, start))
                means.append(_mean_rows(q.values, name, start))
                for k, qname in enumerate(("cost",) + RISK_QOIS):
                    if qname in RISK_QOIS:
                        window_risk.append((start, name, qname, float(np.mean(prof.level3[:, k]))))
        except Exception as exc:
            raise RuntimeError(f"real-time assessment failed at step {start} ({case} case): {exc}") from exc
        if first is None:
            first = (start, y0)
    _csv(pd.concat(profiles, ignore_index=True), out / "profiles.csv")
    _csv(pd.concat(means, ignore_index=True), out / "qoi_means.csv")
    wr = pd.DataFrame(window_risk, columns=["window_start", "evaluator", "qoi", "level3"])
    _csv(wr, out / "window_risk.csv")
    _csv(risk_errors(wr, case), out / "errors.csv")

    # wall-clock per scenario at the first window
    start, y0 = first
    timing_set = gbm_short_term(
        actual_day[start : start + cfg.horizon], cfg.timing_n, cfg.rel_sigma_1h, _seed(cfg.seed, 99, start), system.zones
    )
    selected = manifest["selected"]
    oracle_s = _time_per_scenario(OracleEvaluator(system, schedule, y0, start), timing_set.values, cfg.timing_repeats)
    per_model = {
        k: _time_per_scenario(SurrogateEvaluator(b, start), timing_set.values, cfg.timing_repeats)
        for k, b in banks.items()
    }
    timing = {
        "case": case,
        "scenario_id": scenario_id,
        "window_start": start,
        "n_scenarios": cfg.timing_n,
        "repeats": cfg.timing_repeats,
        "statistic": "median wall-clock seconds per scenario",
        "oracle_seconds_per_scenario": oracle_s,
        "surrogate_model": selected,
        "surrogate_seconds_per_scenario": per_model[selected],
        "speedup": oracle_s / per_model[selected],
        "speedup_by_model": {k: oracle_s / v for k, v in per_model.items()},
    }
    _json(timing, out / "timing.json")
    return timing


# -- report ------------------------------------------------------------------------


REPORT_FILES = ("da_probability.csv", "da_risk.csv", "qoi_traces.csv", "risk_traces.csv", "risk_errors.csv")


def cmd_report(cfg: RunConfig) -> list[Path]:
    p = RunPaths(Path(cfg.out))
    da = pd.read_csv(_require(p.da / "risk_profile.csv", "da-assess"))
    case_dirs = [p.rt / c for c in CASES if (p.rt / c / "window_risk.csv").exists()]
    if not case_dirs:
        raise MissingInputError(f"no real-time results under {p.rt}: run `gridrisk rt-assess` first")
    p.report.mkdir(parents=True, exist_ok=True)
    da["hour"] = da["step"] // STEPS_PER_HOUR
    risky = da[da["qoi"] != "cost"]
    _csv(risky[["step", "hour", "qoi", "level2"]], p.report / REPORT_FILES[0])
    _csv(da[["step", "hour", "qoi", "level1", "level3"]], p.report / REPORT_FILES[1])
    traces, risks = [], []
    for d in case_dirs:
        m = pd.read_csv(d / "qoi_means.csv")
        m.insert(0, "case", d.name)
        traces.append(m)
        r = pd.read_csv(d / "window_risk.csv")
        r.insert(0, "case", d.name)
        risks.append(r)
    _csv(pd.concat(traces, ignore_index=True), p.report / REPORT_FILES[2])
    _csv(pd.concat(risks, ignore_index=True), p.report / REPORT_FILES[3])
    _csv(pd.read_csv(_require(p.rt / "error_table.csv", "rt-assess")), p.report / REPORT_FILES[4])
    return [p.report / f for f in REPORT_FILES]

