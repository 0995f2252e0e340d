"""Command-line front end for the Monte-Carlo experiments.

    otfs-cdid ber --config configs/ber.json --out ber.csv
    otfs-cdid trajectory --config configs/traj.json --out traj.csv --workers 4

Single-threaded BLAS is pinned here, before numpy loads, so results do not
depend on the host's core count.
"""

import os

for _k in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_k, "1")

import argparse
import dataclasses
import sys

from .harness import (
    CSV_COLUMNS,
    ConfigError,
    emit_csv,
    load_config,
    run_experiment,
    write_metadata,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otfs-cdid",
        description="OTFS cross-domain iterative detection experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, doc in (
        ("ber", "bit error rate vs SNR"),
        ("bias", "estimation bias of the detector means per iteration"),
        ("trajectory", "empirical error states vs state-evolution predictions"),
        ("predict", "state-evolution predictions and fixed points only"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--frames", type=int, default=None, help="override config n_frames")
        p.add_argument("--iters", type=int, default=None, help="override config n_iters")
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if config.experiment != args.experiment:
            raise ConfigError(
                f"config is for experiment {config.experiment!r}, "
                f"but the {args.experiment!r} command was invoked"
            )
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.frames is not None:
            overrides["n_frames"] = args.frames
        if args.iters is not None:
            overrides["n_iters"] = args.iters
        if overrides:
            config = dataclasses.replace(config, **overrides)
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rows = run_experiment(config, workers=args.workers)
    emit_csv(rows, args.out, CSV_COLUMNS[config.experiment])
    write_metadata(config, args.out, args.workers)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
