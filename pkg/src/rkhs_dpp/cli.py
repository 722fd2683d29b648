"""``rkhs-dpp <experiment> --config path.json [--out dir] [--seed u64]``.

Exit status: 0 when every hard invariant holds, 1 when a check fails or
the library rejects the input (summary.json names the check), 2 for an
unreadable or invalid config.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigParse
from .experiments import EXPERIMENTS, ExperimentConfig, run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rkhs-dpp", description="DPP / RKHS window experiments")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--out", default=None, help="output directory (default: config 'output')")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--x0", type=int, default=None)
    p.add_argument("--ambient-factor", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--n-samples", type=int, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as f:
            cfg = ExperimentConfig.from_json(f.read())
        cfg = cfg.with_overrides(
            seed=args.seed, x0=args.x0, ambient_factor=args.ambient_factor,
            n_max=args.n_max, n_samples=args.n_samples,
        )
        status = run(cfg, args.experiment, args.out)
    except (ConfigParse, OSError) as exc:
        print(f"rkhs-dpp: config error: {exc}", file=sys.stderr)
        return 2
    out = args.out if args.out is not None else cfg.output
    with open(f"{out}/summary.json") as f:
        summary = json.load(f)
    line = f"{summary['experiment']}: {summary['status']}"
    if "verdict" in summary["info"]:
        line += f", verdict {summary['info']['verdict']}"
    if summary["failed_checks"]:
        line += " (failed: " + ", ".join(summary["failed_checks"]) + ")"
    print(line)
    return status


if __name__ == "__main__":
    sys.exit(main())
