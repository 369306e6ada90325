"""Command-line entry point.

Exit status: 0 on success, 2 when a checked assertion fails, 1 on any other error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .. import synthgraph
from .experiments import (
    PRESETS,
    ExperimentSpec,
    check_tightness,
    reproduce_tightness_table,
    run_scenario,
    sweep,
)
from .export import FORMATS, export_from_directory

OUT_ENV = "OODGRAPH_OUT"
DEFAULT_OUT = "oodgraph-out"


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0,3,5-7"`` -> ``(0, 3, 5, 6, 7)``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return tuple(sorted(set(seeds)))


def parse_formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {FORMATS}")
    return fmts


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _scenario(args: argparse.Namespace, default: str) -> synthgraph.ScenarioConfig | str:
    if args.config:
        return synthgraph.load_config(args.config)
    preset = args.preset or default
    return f"fig2-{preset}" if preset in synthgraph.PRESETS else preset


def _spec(args: argparse.Namespace, default: str) -> ExperimentSpec:
    options = {}
    if getattr(args, "no_degrees", False):
        options["with_degrees"] = False
    if getattr(args, "aoi_for_bound", None):
        options["aoi_for_bound"] = args.aoi_for_bound
    return ExperimentSpec(
        scenario=_scenario(args, default),
        k=args.k,
        seeds=args.seed,
        output_dir=_out_dir(args),
        emit_plots=args.plots,
        formats=args.format,
        options=options,
        workers=args.workers,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    if args.config:
        config = synthgraph.load_config(args.config)
    else:
        name = (args.preset or "near").removeprefix("fig2-")
        if name not in synthgraph.PRESETS:
            raise ValueError(f"generate accepts presets {sorted(synthgraph.PRESETS)} or fig2-*")
        config = synthgraph.PRESETS[name]
    out = _out_dir(args)
    for seed in args.seed:
        path = synthgraph.save_scenario(synthgraph.make_scenario(config.replace(seed=seed)), out / f"scenario_seed{seed}")
        print(path)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    record = run_scenario(_spec(args, "fig2-near"))
    print(json.dumps(record.medians, indent=2, sort_keys=True))
    for failure in record.failures:
        print(f"seed {failure['seed']} failed: {failure['error']}", file=sys.stderr)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec(args, "sweep-aoi")
    table = sweep(spec, args.axis, args.values)
    for row in table.rows():
        print(row)
    return 0


def cmd_tightness(args: argparse.Namespace) -> int:
    table = reproduce_tightness_table(_spec(args, "tightness-table"))
    for row in table.rows():
        print(row)
    check_tightness(table)
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    for path in export_from_directory(args.input, _out_dir(args), args.format):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodgraph", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON scenario config")
    common.add_argument("--preset", choices=sorted(PRESETS) + sorted(synthgraph.PRESETS))
    common.add_argument("--seed", type=parse_seeds, default=(0, 1, 2, 3, 4), help="e.g. 0,1,2 or 0-4")
    common.add_argument("--k", type=int, default=2)
    common.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--plots", action="store_true", help="also emit SVG figures")
    common.add_argument("--format", type=parse_formats, default=("csv", "json"), help="csv,json,svg")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--no-degrees", action="store_true", help="drop D^{-1/2} factors from embeddings")
    common.add_argument("--aoi-for-bound", choices=("sampled", "renormalized"))

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write scenario archives").set_defaults(func=cmd_generate)
    sub.add_parser("run", parents=[common], help="evaluate a scenario over seeds").set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", parents=[common], help="vary one axis")
    p.add_argument("--axis", choices=("aoi_norm", "aid_norm", "q_norm"))
    p.add_argument("--values", type=lambda s: [float(v) for v in s.split(",")])
    p.set_defaults(func=cmd_sweep)
    sub.add_parser("tightness", parents=[common], help="bound tightness table").set_defaults(func=cmd_tightness)
    p = sub.add_parser("export", parents=[common], help="re-render a saved run directory")
    p.add_argument("--input", type=Path, required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
