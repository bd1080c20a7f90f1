"""Retrain all three model families under several split seeds and print the
unsafe-region NMAE for operating reserve and load shed, with medians.

Needs a finished ``da-assess`` run for the config.

    python scripts/seed_sweep.py --config configs/desk.json --seeds 0 1 2
"""

import argparse
import json
from pathlib import Path

import numpy as np

from gridrisk.config import RunConfig
from gridrisk.fixtures import desk_system
from gridrisk.pipeline import RunPaths, hal_settings
from gridrisk.scenarios import read_scenarios
from gridrisk.surrogate import MODEL_KINDS, TrainOptions, build_datasets, jit_train, read_corpus, scenario_split

QOIS = ("op_reserve", "load_shed")


def datasets_for_seed(cfg: RunConfig, seed: int):
    da = RunPaths(Path(cfg.out)).da
    scen = read_scenarios(da / "scenarios.csv")
    qoi = read_corpus(da / "corpus.csv")
    aug_v = read_scenarios(da / "augmented_scenarios.csv").values
    aug_q = read_corpus(da / "augmented_corpus.csv")
    src = json.loads((da / "augmented_sources.json").read_text())
    # stressed copies of scenarios that this seed holds out would leak into training
    train = scenario_split(len(scen), seed, cfg.train_frac)
    keep = np.repeat(train[src["source_scenarios"]], len(src["factors"]))
    return build_datasets(qoi, scen.values, aug_q[keep], aug_v[keep], seed, cfg.train_frac)


def sweep(cfg: RunConfig, seeds) -> dict:
    options = TrainOptions(cfg.rf_options, cfg.nn_options, hal_settings(desk_system()))
    scores = {k: {q: [] for q in QOIS} for k in MODEL_KINDS}
    for seed in seeds:
        data = datasets_for_seed(cfg, seed)
        for kind in MODEL_KINDS:
            report = jit_train(data, kind, options, seed).report()
            for q in QOIS:
                v = report.qoi[q].unsafe_nmae
                scores[kind][q].append(np.nan if v is None else round(v, 4))
            print(seed, kind, {q: scores[kind][q][-1] for q in QOIS}, flush=True)
    return scores


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/desk.json")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    a = ap.parse_args()
    scores = sweep(RunConfig.load(a.config), a.seeds)
    for kind, d in scores.items():
        print(kind, {q: round(float(np.median(v)), 4) for q, v in d.items()})
