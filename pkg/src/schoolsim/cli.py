"""Command-line surface: simulate, scenarios, verify, sweep.

Exit codes: 0 success, 1 validation/usage failure, 2 i/o failure.  The
default output directory comes from SCHOOLSIM_OUT_DIR when set.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .diagnostics import Classification
from .scenarios import (ScenarioSpec, apply_overrides, builtin_scenarios,
                        classification_fractions, get_scenario, load_scenario,
                        run_replicates, sweep_runs, write_summary_csv, write_sweep_csv)

DEFAULT_OUT_DIR = "schoolsim-out"
OUT_DIR_ENV = "SCHOOLSIM_OUT_DIR"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schoolsim",
        description="Swarm simulator: attraction-repulsion + velocity alignment "
                    "with Brownian position noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a named scenario or a config file")
    sim.add_argument("scenario", nargs="?", help="built-in scenario name")
    sim.add_argument("--config", help="YAML scenario file (instead of a name)")
    sim.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    sim.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    sim.add_argument("--dt", type=float, help="override integrator step")
    sim.add_argument("--t-end", type=float, help="override time horizon")
    sim.add_argument("--replicates", type=int, help="number of seeded runs")
    sim.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="dotted-path config override, repeatable")
    sim.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    sub.add_parser("scenarios", help="list built-in scenarios")

    sub.add_parser("verify", help="run the invariant/property self-checks")

    swp = sub.add_parser("sweep", help="vary one parameter across values and tabulate outcomes")
    swp.add_argument("scenario", nargs="?", help="built-in scenario name")
    swp.add_argument("--config", help="YAML scenario file (instead of a name)")
    swp.add_argument("--param", help="parameter to vary (default: the scenario's sweep axis)")
    swp.add_argument("--values", help="comma-separated values (default: the scenario's sweep values)")
    swp.add_argument("--replicates", type=int, default=10, help="seeds per value (default 10)")
    swp.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    swp.add_argument("--out-dir", help="output directory")
    swp.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="dotted-path config override, repeatable")
    return parser


def _resolve_out_dir(arg: Optional[str]) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))


def _parse_overrides(pairs: Sequence[str]) -> dict:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--set expects KEY=VALUE, got {pair!r}")
        key, raw = pair.split("=", 1)
        overrides[key.strip()] = yaml.safe_load(raw)
    return overrides


def _load_spec(args) -> ScenarioSpec:
    if args.config:
        spec = load_scenario(args.config)
    elif args.scenario:
        spec = get_scenario(args.scenario)
    else:
        raise ValueError("give a scenario name or --config FILE")
    overrides = _parse_overrides(args.overrides)
    if getattr(args, "dt", None) is not None:
        overrides["integrator.dt"] = args.dt
    if getattr(args, "t_end", None) is not None:
        overrides["integrator.t_end"] = args.t_end
    if overrides:
        spec = apply_overrides(spec, overrides)
    return spec


def _cmd_scenarios() -> int:
    for spec in builtin_scenarios():
        sweep = ""
        if spec.sweep is not None:
            values = ", ".join(f"{v:g}" for v in spec.sweep.values)
            sweep = f"  [sweep {spec.sweep.parameter} in {{{values}}}]"
        print(f"{spec.name:14s} N={spec.params.n_particles:<4d} d={spec.params.dim}  "
              f"t_end={spec.integrator.t_end:g}  {spec.description}{sweep}")
    return 0


def _cmd_simulate(args) -> int:
    spec = _load_spec(args)
    replicates = args.replicates if args.replicates is not None else spec.replicates
    out_dir = _resolve_out_dir(args.out_dir)
    records = run_replicates(spec, args.seed, replicates, out_dir=out_dir,
                             figures=not args.no_figures)
    summary_path = out_dir / spec.name / "summary.csv"
    write_summary_csv(records, summary_path)
    fractions = classification_fractions(records)
    print(f"{spec.name}: {replicates} run(s), seeds {args.seed}..{args.seed + replicates - 1}")
    for rec in records:
        print(f"  seed {rec.seed}: termination={rec.termination.value} "
              f"classification={rec.classification.value}")
    frac_str = "  ".join(f"{c.value}={fractions[c.value + '_fraction']:.2f}"
                         for c in Classification)
    print(f"fractions: {frac_str}")
    print(f"summary: {summary_path}")
    return 0


def _cmd_sweep(args) -> int:
    spec = _load_spec(args)
    param = args.param
    values = None
    if args.values:
        values = [float(v) for v in args.values.split(",")]
    if param is None and spec.sweep is not None:
        param = spec.sweep.parameter
        if values is None:
            values = list(spec.sweep.values)
    if param is None or values is None:
        raise ValueError("give --param and --values (or pick a scenario with a sweep axis)")
    out_dir = _resolve_out_dir(args.out_dir)
    rows = sweep_runs(spec, param, values, args.replicates, args.seed, out_dir=out_dir)
    sweep_path = out_dir / spec.name / "sweep.csv"
    sweep_path.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, param, sweep_path)
    header = [param, "n"] + [f"{c.value}" for c in Classification]
    print("  ".join(f"{h:>10s}" for h in header))
    for row in rows:
        cells = [f"{row['value']:>10g}", f"{row['n']:>10d}"]
        cells += [f"{row[c.value + '_fraction']:>10.3f}" for c in Classification]
        print("  ".join(cells))
    print(f"sweep table: {sweep_path}")
    return 0


def _cmd_verify() -> int:
    from .verify import run_verification

    results = run_verification(verbose=True)
    return 0 if all(r.passed for r in results) else 1


def cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command == "scenarios":
            return _cmd_scenarios()
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "verify":
            return _cmd_verify()
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        target = getattr(exc, "filename", None)
        where = f" ({target})" if target else ""
        print(f"i/o error: {exc}{where}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli())
