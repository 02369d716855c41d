"""Command-line entry point.

Subcommands: train, evaluate, sweep, plot-data, validate-config.
Every run is deterministic given (--config, flags, --seed); exit status is
zero on success and nonzero with a stderr diagnostic otherwise.
"""

from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from . import harness
from .config import ConfigError
from .mdp import CatalogTooLargeError


def _add_common(parser, with_scheme=True):
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--profile", default="desk", choices=sorted(cfgmod.PROFILES),
                        help="base parameter profile (default: desk)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--set", dest="sets", action="append", default=[],
                        metavar="KEY=VALUE", help="override one configuration key")
    if with_scheme:
        parser.add_argument("--scheme", help="scheduling scheme to run")


def _resolve(args) -> cfgmod.ExperimentConfig:
    file_values = cfgmod.parse_config_file(args.config) if args.config else {}
    overrides = {}
    for item in args.sets:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        overrides[key.strip()] = cfgmod._parse_value(key.strip(), raw)
    if getattr(args, "scheme", None):
        overrides["scheme"] = args.scheme
    return cfgmod.resolve_config(args.profile, file_values, overrides)


def _parse_int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoisched",
        description="Simulator and DQN trainer for freshness-aware NOMA uplink scheduling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one scheme and write metrics + checkpoint")
    _add_common(p_train)

    p_eval = sub.add_parser("evaluate", help="greedy rollouts of a stored checkpoint")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)

    p_sweep = sub.add_parser("sweep", help="train/evaluate across one parameter axis")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=sorted(harness.SWEEP_AXES))
    p_sweep.add_argument("--seeds", default="0", help="comma-separated seed list")
    p_sweep.add_argument("--schemes", help="comma-separated scheme list (default: --scheme)")
    p_sweep.add_argument("--values", help="comma-separated axis values (default: profile list)")

    p_plot = sub.add_parser("plot-data", help="project metrics onto one figure's series")
    p_plot.add_argument("--metrics", required=True)
    p_plot.add_argument("--figure", required=True)
    p_plot.add_argument("--out", default="out")
    p_plot.add_argument("--no-render", action="store_true",
                        help="write only the delimited series, no PNG")

    p_val = sub.add_parser("validate-config", help="resolve and echo a configuration")
    _add_common(p_val)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cfg = _resolve(args)
            out = harness.run_train(cfg, args.seed, args.out)
            print(out["metrics"])
            print(out["checkpoint"])
        elif args.command == "evaluate":
            cfg = _resolve(args)
            out = harness.run_evaluate(cfg, args.seed, args.checkpoint, args.out)
            print(out["metrics"])
        elif args.command == "sweep":
            cfg = _resolve(args)
            seeds = _parse_int_list(args.seeds)
            schemes = args.schemes.split(",") if args.schemes else None
            values = ([float(v) for v in args.values.split(",")]
                      if args.values else None)
            out = harness.run_sweep(cfg, args.axis, seeds, args.out,
                                    schemes=schemes, values=values)
            print(out["metrics"])
        elif args.command == "plot-data":
            out = harness.emit_plot_data(
                args.metrics, args.figure, args.out, render=not args.no_render
            )
            for path in out["series"]:
                print(path)
            if out["png"]:
                print(out["png"])
        elif args.command == "validate-config":
            cfg = _resolve(args)
            sys.stdout.write(cfgmod.serialize_config(cfg))
    except (ConfigError, CatalogTooLargeError, harness.UnknownFigureError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
