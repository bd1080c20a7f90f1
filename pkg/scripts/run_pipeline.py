"""Run every pipeline stage in order and print wall-clock time per stage.

    python scripts/run_pipeline.py --config configs/desk.json
"""

import argparse
import json
import time

from gridrisk.cli import main

STAGES = ("gen-fixtures", "da-assess", "train", "rt-assess", "report")


def run(config: str, out: str | None, parallelism: int | None) -> dict[str, float]:
    extra = []
    if out:
        extra += ["--out", out]
    if parallelism:
        extra += ["--parallelism", str(parallelism)]
    times = {}
    for stage in STAGES:
        t0 = time.perf_counter()
        if main([stage, "--config", config, *extra]) != 0:
            raise SystemExit(f"{stage} failed")
        times[stage] = round(time.perf_counter() - t0, 1)
    return times


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/desk.json")
    ap.add_argument("--out")
    ap.add_argument("--parallelism", type=int)
    a = ap.parse_args()
    print(json.dumps(run(a.config, a.out, a.parallelism), indent=1))
