"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines; the
summary is also collected into ``ACCEPTANCE`` and printed at module
teardown. The desk pipeline behind criteria 5-8 runs once per session on a
reduced configuration (see ``DESK``).
"""

import json
import time

import numpy as np
import pandas as pd
import pytest

from gridrisk.config import RunConfig
from gridrisk.fixtures import DESK_ZONES, base_days, desk_schedule, desk_system
from gridrisk.lpsolve import Status, solve
from gridrisk.pipeline import (
    REPORT_FILES,
    RunPaths,
    cmd_da_assess,
    cmd_gen_fixtures,
    cmd_report,
    cmd_rt_assess,
    cmd_train,
    hal_settings,
)
from gridrisk.risk import level1, level2, level3, reserve_shortfall
from gridrisk.scenarios import dirichlet_mix, gbm_short_term, read_scenarios
from gridrisk.sced import Simulator, initial_dispatch
from gridrisk.surrogate import TrainOptions, build_datasets, jit_train, read_corpus, scenario_split
from gridrisk.surrogate.hal import HalParams, hal_loss, hal_subgradient, unit_params
from gridrisk.surrogate.nn import init_params
from oracles import backprop_vs_finite_differences, random_lp, sced_qoi_from_primal, vertex_enumeration

# reduced desk run: paper scale is 2500 DA and 1000 ST scenarios
DESK = {
    "da_n": 400,
    "augment_n": 60,
    "augment_factors": [0.04, 0.08],
    "st_n": 100,
    "timing_n": 1000,
    "timing_repeats": 3,
}
SEEDS = (0, 1, 2)
TINY = {
    "da_n": 30,
    "augment_n": 5,
    "rf": {"n_trees": 10},
    "nn": {"max_epochs": 3},
    "st_n": 10,
    "stress_windows": [[6, 7], [17, 18]],
    "rt_every": 6,
    "timing_n": 10,
    "timing_repeats": 1,
}

ACCEPTANCE: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE[n] = line
    print("\n" + line)


@pytest.fixture(scope="module", autouse=True)
def summary():
    yield
    print("\n\nacceptance summary")
    for n in sorted(ACCEPTANCE):
        print(ACCEPTANCE[n])


# -- 1. LP oracle equivalence ------------------------------------------------------


def test_criterion_1_lp_oracle():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    failures, worst = 0, 0.0
    for _ in range(100):
        p = random_lp(rng)
        best = vertex_enumeration(p)
        sol = solve(p)
        if np.isinf(best):
            failures += sol.status is not Status.INFEASIBLE
        elif sol.status is not Status.OPTIMAL:
            failures += 1
        else:
            gap = abs(sol.objective_value - best)
            worst = max(worst, gap)
            failures += gap > 1e-8
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10
    record(1, ok, f"100 LPs, failures={failures}, worst gap={worst:.1e} (tol 1e-8), {elapsed:.2f}s (< 10s)")
    assert ok


# -- 2. metric exactness -----------------------------------------------------------


def test_criterion_2_metric_exactness():
    t0 = time.perf_counter()
    checks = {
        "level1 {1,2,3,4} a=50": level1([1, 2, 3, 4], alpha=50) == 1.5,
        "level1 a=100 is mean": level1([3.0, 1.0, 8.0], alpha=100) == 4.0,
        "level2 strict": level2([1, 2, 3, 4], qbar=2.5) == 0.5 and level2([7, 7], qbar=7) == 0.0,
        "level3 437,500": level3([2000, 2500], consequence=reserve_shortfall(2250, 3500)) == 437_500,
    }
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 1
    bad = [k for k, v in checks.items() if not v]
    record(2, ok, f"{len(checks) - len(bad)}/{len(checks)} exact, {elapsed * 1e3:.1f}ms (< 1s) {bad or ''}")
    assert ok


# -- 3. SCED physics ---------------------------------------------------------------


def test_criterion_3_sced_physics():
    t0 = time.perf_counter()
    system = desk_system()
    days = base_days(20, seed=0)
    sched = desk_schedule(system, days)
    scen = dirichlet_mix(days, 50, 0.01, seed=11, zones=DESK_ZONES)
    sim = Simulator(system, sched)
    zone_of = system.zone_index()
    worst_balance = worst_qoi = 0.0
    steps = 0
    for values in scen.values:
        y0 = initial_dispatch(system, sched.at_step(0), values[0])
        res = sim.run(y0, values, keep_primal=True)
        for t, x in enumerate(res.primal):
            lay = sim.layout(sched.at_step(t))
            p = lay.dispatch(x)
            v = values[t]
            for z in range(len(system.zones)):
                residual = (
                    p[zone_of == z].sum() + v[z, 1] + v[z, 2] + x[lay.shed[z]]
                    - x[lay.spill[z]] - x[lay.export[z]] - v[z, 0]
                )
                worst_balance = max(worst_balance, abs(residual))
            worst_qoi = max(worst_qoi, float(np.max(np.abs(res.qoi[t] - sced_qoi_from_primal(lay, x)))))
            steps += 1
    elapsed = time.perf_counter() - t0
    ok = worst_balance <= 1e-6 and worst_qoi <= 1e-6 and elapsed < 300
    record(
        3,
        ok,
        f"{steps} steps, max balance residual={worst_balance:.1e}, max QoI recompute diff={worst_qoi:.1e} "
        f"(tol 1e-6), {elapsed:.0f}s (< 300s, single process)",
    )
    assert ok


# -- 4. HAL correctness ------------------------------------------------------------


def test_criterion_4_hal():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    q, qhat = rng.normal(0, 1000, (2, 10_000))
    unit_ok = all(
        np.array_equal(hal_loss(q, qhat, unit_params(qbar, d)), np.abs(qhat - q))
        for qbar in (None, 0.0, 500.0)
        for d in ("below", "above")
    )

    p = HalParams(qbar=500.0)
    q1, qh1 = rng.uniform(0, 1000, (2, 1000))
    keep = np.abs(qh1 - q1) > 1e-2
    h = 1e-4
    fd = (hal_loss(q1, qh1 + h, p) - hal_loss(q1, qh1 - h, p)) / (2 * h)
    sub_err = float(np.max(np.abs(hal_subgradient(q1, qh1, p)[keep] - fd[keep])))

    hal = [HalParams(), HalParams(qbar=0.2, direction="above"), HalParams(qbar=-0.1), HalParams(qbar=0.3)]
    W, b = init_params(5, rng)
    X, Y = rng.normal(size=(40, 5)), rng.normal(size=(40, 4))
    grads = {loss: backprop_vs_finite_differences(W, b, X, Y, loss, hal, rng) for loss in ("mae", "hal")}
    worst_rel = max(w for w, _ in grads.values())
    checked = min(c for _, c in grads.values())
    elapsed = time.perf_counter() - t0
    ok = unit_ok and sub_err <= 1e-6 and worst_rel <= 1e-4 and checked >= 50 and elapsed < 30
    record(
        4,
        ok,
        f"unit weights == |err| on 10000 cases: {unit_ok}; subgradient vs FD max diff={sub_err:.1e} (tol 1e-6); "
        f"backprop vs FD worst rel={worst_rel:.1e} over >= {checked} weights per loss (tol 1e-4); {elapsed:.1f}s (< 30s)",
    )
    assert ok


# -- desk pipeline shared by 5-8 ---------------------------------------------------


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk") / "run"
    cfg = RunConfig.from_dict({**DESK, "out": str(out)})
    times = {}
    t0 = time.perf_counter()
    cmd_gen_fixtures(cfg)
    cmd_da_assess(cfg)
    times["da"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    manifest = cmd_train(cfg)
    times["train"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    timings = cmd_rt_assess(cfg)
    times["rt"] = time.perf_counter() - t0
    cmd_report(cfg)
    return cfg, manifest, timings, times


def reseeded_datasets(cfg, seed):
    """Datasets under another split seed, keeping only stressed copies of its training scenarios."""
    da = RunPaths(cfg.out).da
    scen = read_scenarios(da / "scenarios.csv")
    qoi = read_corpus(da / "corpus.csv")
    aug_v = read_scenarios(da / "augmented_scenarios.csv").values
    aug_q = read_corpus(da / "augmented_corpus.csv")
    src = json.loads((da / "augmented_sources.json").read_text())
    train = scenario_split(len(scen), seed, cfg.train_frac)
    keep = np.repeat(train[src["source_scenarios"]], len(src["factors"]))
    return build_datasets(qoi, scen.values, aug_q[keep], aug_v[keep], seed, cfg.train_frac)


def unsafe_nmae(report, qoi):
    v = report.qoi[qoi].unsafe_nmae
    return np.nan if v is None else v


def test_criterion_5_validation_ordering(desk):
    cfg, _, _, times = desk
    t0 = time.perf_counter()
    system = desk_system()
    options = TrainOptions(cfg.rf_options, cfg.nn_options, hal_settings(system))
    scores = {k: {"op_reserve": [], "load_shed": []} for k in ("rf", "nn_mae", "nn_hal")}
    for seed in SEEDS:
        if seed == cfg.seed:
            table = pd.read_csv(RunPaths(cfg.out).train / "validation.csv")
            for k in scores:
                for qoi in scores[k]:
                    row = table[(table.model == k) & (table.qoi == qoi)]
                    scores[k][qoi].append(float(row.unsafe_nmae.iloc[0]))
            continue
        datasets = reseeded_datasets(cfg, seed)
        for k in scores:
            report = jit_train(datasets, k, options, seed).report()
            for qoi in scores[k]:
                scores[k][qoi].append(unsafe_nmae(report, qoi))
    med = {k: {q: float(np.median(v)) for q, v in d.items()} for k, d in scores.items()}
    a = all(med["rf"][q] < med["nn_mae"][q] for q in ("op_reserve", "load_shed"))
    b = all(med["nn_hal"][q] <= med["nn_mae"][q] for q in ("op_reserve", "load_shed"))
    elapsed = time.perf_counter() - t0 + times["da"] + times["train"]
    ok = a and b and elapsed < 1200
    fmt = "; ".join(f"{k} op={med[k]['op_reserve']:.4f} shed={med[k]['load_shed']:.4f}" for k in med)
    record(5, ok, f"median unsafe NMAE over seeds {SEEDS}: {fmt}; (a) RF<MAE: {a}; (b) HAL<=MAE: {b}; "
           f"{elapsed:.0f}s incl. DA+train (< 1200s)")
    print("per-seed unsafe NMAE:", json.dumps(scores))
    assert ok


def test_criterion_6_risk_fidelity(desk):
    cfg, manifest, _, times = desk
    selected = manifest["selected"]
    rt = RunPaths(cfg.out).rt
    wr = pd.concat([pd.read_csv(rt / c / "window_risk.csv").assign(case=c) for c in ("high", "medium", "low")])
    wide = wr.pivot_table(index=["case", "window_start", "qoi"], columns="evaluator", values="level3").reset_index()
    op = wide[(wide.qoi == "op_reserve") & (wide.oracle > 0)]
    rel = np.abs(op[selected] - op.oracle) / op.oracle
    within = int((rel <= 0.25).sum())
    per_window = len(op) > 0 and within == len(op)
    agg = float(np.abs(op[selected] - op.oracle).sum() / op.oracle.sum()) if len(op) else float("nan")
    shed = wide[wide.qoi == "load_shed"]
    high_mean = float(shed[shed.case == "high"].oracle.mean())
    low_est = float(shed[shed.case == "low"][selected].mean())
    low_ok = low_est <= 0.05 * high_mean
    ok = per_window and low_ok and times["rt"] < 1800
    record(
        6,
        ok,
        f"selected={selected}; op-reserve windows with oracle risk>0: {len(op)}, within 25%: {within} "
        f"(aggregate rel err {agg:.3f}, max {float(rel.max()) if len(op) else float('nan'):.3f}); "
        f"low-case surrogate shed risk {low_est:.1f} vs 5% of high-case mean {0.05 * high_mean:.1f}: {low_ok}; "
        f"rt {times['rt']:.0f}s (< 1800s)",
    )
    assert ok


def test_criterion_7_speedup(desk):
    cfg, manifest, timings, _ = desk
    speedups = {c: t["speedup"] for c, t in timings.items()}
    by_model = timings["high"]["speedup_by_model"]
    ok = min(speedups.values()) >= 50 and all(t["n_scenarios"] == 1000 for t in timings.values())
    record(
        7,
        ok,
        f"selected={manifest['selected']}, speedup per case {', '.join(f'{c}={v:.0f}x' for c, v in speedups.items())} "
        f"(>= 50x over 1000 scenarios); all models at high case: "
        f"{', '.join(f'{k}={v:.0f}x' for k, v in by_model.items())}",
    )
    assert ok


def test_criterion_8_determinism(tmp_path):
    outputs = []
    for run in ("a", "b"):
        cfg = RunConfig.from_dict({**TINY, "out": str(tmp_path / run)})
        cmd_gen_fixtures(cfg)
        cmd_da_assess(cfg)
        cmd_train(cfg)
        cmd_rt_assess(cfg)
        cmd_report(cfg)
        p = RunPaths(cfg.out)
        files = [p.da / "risk_profile.csv"] + [p.rt / c / "profiles.csv" for c in ("high", "medium", "low")]
        files += [p.report / f for f in REPORT_FILES]
        outputs.append({f.relative_to(p.root): f.read_bytes() for f in files})
    same = [k for k in outputs[0] if outputs[0][k] == outputs[1].get(k)]
    ok = len(same) == len(outputs[0])
    record(8, ok, f"{len(same)}/{len(outputs[0])} risk-profile and report CSVs byte-identical across two runs")
    assert ok


# -- 9. GBM calibration ------------------------------------------------------------


def test_criterion_9_gbm_calibration():
    ss = gbm_short_term(np.full((12, 1, 3), 1.0), 10_000, 0.025, seed=0, zones=("z",))
    rel_std = float(ss.values[:, -1, 0, 0].std(ddof=1))
    ok = 0.023 <= rel_std <= 0.027
    record(9, ok, f"terminal relative std over 10000 paths = {rel_std:.5f} (target [0.023, 0.027])")
    assert ok
