"""Command-line runner: ``morphoplast <subcommand> --config FILE``.

Subcommands map onto experiment kinds:

* ``pool`` — sample genomes, develop them, evaluate baselines.
* ``sweep`` — plasticity-grid sweeps (stationary, non-stationary, gated,
  or dose-response, per the config's ``kind``).
* ``coevolve`` — GA runs for conditions A/B/C.
* ``control`` — topology-matched random RNNs plus their evaluations.
* ``report`` — CSV tables from existing result files.

The run config is a key=value text file (see :mod:`morphoplast.runconfig`).
Results land in ``out_dir`` or, when unset, under ``$MORPHOPLAST_OUT``
(default ``./runs``).  Reruns resume: already-present records are skipped.
The exit status is 0 on success, 1 on a config or runtime error, and 2
when more evaluations than ``--max-degenerate`` hit non-finite weights.
"""

from __future__ import annotations

import argparse
import json
import sys

from .pipelines import OUTPUT_ROOT_ENV, run_experiment
from .runconfig import parse_config_file

_SUBCOMMAND_KINDS = {
    "pool": ("pool",),
    "sweep": ("sweep", "nonstationary", "off_on", "dose_response"),
    "coevolve": ("coevolve",),
    "control": ("random_control",),
    "report": ("report",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphoplast",
        description="grow recurrent controllers and probe their plasticity",
        epilog=f"output root for runs without out_dir: ${OUTPUT_ROOT_ENV} (default ./runs)",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, kinds in _SUBCOMMAND_KINDS.items():
        p = sub.add_parser(name, help=f"run a config of kind {' / '.join(kinds)}")
        p.add_argument("--config", required=True, help="key=value run config file")
        p.add_argument("--workers", type=int, default=1, help="evaluation worker processes")
        p.add_argument(
            "--resume",
            action=argparse.BooleanOptionalAction,
            default=True,
            help="keep existing records (default); --no-resume recomputes",
        )
        p.add_argument(
            "--snapshot-development",
            action="store_true",
            help="dump per-iteration development grids (pool runs)",
        )
        p.add_argument(
            "--max-degenerate",
            type=int,
            default=0,
            help="tolerated count of evaluations with non-finite weights",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config_file(args.config)
        allowed = _SUBCOMMAND_KINDS[args.subcommand]
        if config.kind not in allowed:
            raise ValueError(
                f"subcommand {args.subcommand!r} expects kind in {allowed}, "
                f"config says {config.kind!r}"
            )
        summary = run_experiment(
            config,
            workers=args.workers,
            resume=args.resume,
            snapshot=args.snapshot_development,
        )
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True))
    if summary.get("degenerate_records", 0) > args.max_degenerate:
        print(
            f"error: {summary['degenerate_records']} degenerate evaluations "
            f"exceed --max-degenerate {args.max_degenerate}",
            file=sys.stderr,
        )
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
