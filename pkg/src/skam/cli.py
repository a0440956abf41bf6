"""Command line entry point: ``skam <experiment> --config <path> --out <dir>``."""

from __future__ import annotations

import argparse
import json
import sys

from .context import ParameterError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skam", description="Run a semiclassical normal-form experiment.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON config file (defaults are used for missing keys)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, help="worker processes (default: $SKAM_WORKERS or 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = {}
        if args.config:
            with open(args.config) as fh:
                doc = json.load(fh)
        if args.seed is not None:
            doc["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(doc, args.experiment)
    except (ParameterError, ValueError, OSError) as exc:
        print(f"skam: invalid configuration: {exc}", file=sys.stderr)
        return 2
    res = run_experiment(cfg, args.out, args.workers)
    for c in res.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.measured}")
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())
