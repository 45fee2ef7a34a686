"""Command-line interface.

Each subcommand runs one experiment and writes ``<out>.csv`` and
``<out>.json``.  Exit codes: 0 on pass (or informational runs), 2 when a
quantitative gate fails, 1 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .experiments import run_experiment, emit_outputs

_OVERRIDES = (
    ("--seed", "seed", int),
    ("--alpha", "alpha", float),
    ("--scheme", "scheme", str),
    ("--dim", "dim", int),
    ("--drift", "drift", str),
    ("--schedule", "schedule", str),
    ("--m", "m", int),
    ("--checkpoints", "checkpoints", str),
    ("--x0", "x0", float),
    ("--workers", "workers", int),
    ("--reference", "reference", str),
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stableem",
        description="Euler-Maruyama schemes with decreasing steps for stable-driven SDEs",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--out", default=name, help="output path prefix (default: %(default)s)")
        for flag, _, typ in _OVERRIDES:
            p.add_argument(flag, type=typ, default=None)
    return parser


def _load(args) -> ExperimentConfig:
    overrides = {
        key: getattr(args, key) for _, key, _ in _OVERRIDES if getattr(args, key) is not None
    }
    if args.config:
        cfg = load_config(args.config)
        if cfg.experiment != args.experiment:
            raise ConfigError(
                f"config file is for {cfg.experiment!r}, subcommand is {args.experiment!r}"
            )
        for key, value in overrides.items():
            setattr(cfg, key, value)
        cfg.__post_init__()  # re-validate after overrides
        return cfg
    return ExperimentConfig(experiment=args.experiment, **overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        report = run_experiment(cfg)
        emit_outputs(report, cfg.out or args.out)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if report.verdict is None:
        print(f"{report.experiment}: done (informational)")
        return 0
    print(f"{report.experiment}: {'PASS' if report.verdict else 'FAIL'}")
    return 0 if report.verdict else 2


if __name__ == "__main__":
    sys.exit(main())
