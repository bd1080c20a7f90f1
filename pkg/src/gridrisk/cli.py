"""``gridrisk`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .config import RunConfig
from .pipeline import CASES, MissingInputError, cmd_da_assess, cmd_gen_fixtures, cmd_report, cmd_rt_assess, cmd_train

COMMANDS = ("gen-fixtures", "da-assess", "train", "rt-assess", "report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridrisk", description="Scenario-based operational risk pipeline.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file mirroring RunConfig")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--case", choices=CASES, help="rt-assess only; default runs all three")
    parser.add_argument("--parallelism", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in ("seed", "out", "parallelism") if getattr(args, k) is not None}
    return replace(cfg, **overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "gen-fixtures":
            for path in cmd_gen_fixtures(cfg)[:2]:
                print(path)
        elif args.command == "da-assess":
            profile = cmd_da_assess(cfg)
            print(f"risk profile over {profile.level1.shape[0]} steps written to {cfg.out}/da")
        elif args.command == "train":
            manifest = cmd_train(cfg)
            print(f"selected model: {manifest['selected']}")
        elif args.command == "rt-assess":
            timings = cmd_rt_assess(cfg, args.case)
            print(json.dumps({c: round(t["speedup"], 1) for c, t in timings.items()}))
        else:
            for path in cmd_report(cfg):
                print(path)
    except (MissingInputError, ValueError) as exc:
        print(f"gridrisk {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
