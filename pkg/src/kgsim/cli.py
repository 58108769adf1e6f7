"""Command-line front end.

Subcommands: simulate, sweep, convergence, oracle-check, trend.  Options
mirror the config fields; --config loads a JSON file (or a previous run's
manifest.json) and explicit flags override it.  Exit codes: 0 success,
2 config error, 3 solver failure, 4 check failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config_file, merge_config
from .newmark import SimulationError
from .runner import (CheckFailure, convergence_run, oracle_check_run,
                     simulate_run, sweep_run, trend_rerun)


def _float_list(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON config file (or a run manifest.json)")
    parser.add_argument("--out", help="output directory (default runs/<label>)")
    parser.add_argument("--label", help="run label")
    parser.add_argument("--a2", type=float, help="step height (potential.a2)")
    parser.add_argument("--constant", type=float, dest="constant",
                        help="use a constant potential of this value")
    parser.add_argument("--n-cells", type=int, dest="n_cells")
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-final", type=float, dest="t_final")
    parser.add_argument("--stride", type=int)
    parser.add_argument("--solver", choices=["cg", "direct"])
    parser.add_argument("--cg-tol", type=float, dest="cg_tol")
    parser.add_argument("--kernel", choices=["epanechnikov", "gaussian", "moving_average"])
    parser.add_argument("--bandwidth", type=float)
    parser.add_argument("--window", help="fit window 'lo:hi', or 'auto'/'full'")
    parser.add_argument("--snapshot-times", type=_float_list, dest="snapshot_times")


def _overrides_from_args(args) -> dict:
    over = {}
    simple = {"label": "label", "n_cells": "n_cells", "dt": "dt",
              "t_final": "t_final", "stride": "stride", "solver": "solver",
              "snapshot_times": "snapshot_times"}
    for attr, key in simple.items():
        val = getattr(args, attr, None)
        if val is not None:
            over[key] = val
    if getattr(args, "a2", None) is not None and getattr(args, "constant", None) is not None:
        raise ConfigError("--a2 and --constant are mutually exclusive")
    if getattr(args, "a2", None) is not None:
        over["potential"] = {"kind": "step", "a1": 0.0, "a2": args.a2}
    if getattr(args, "constant", None) is not None:
        over["potential"] = {"kind": "constant", "value": args.constant}
    if getattr(args, "cg_tol", None) is not None:
        over["cg"] = {"rel_tolerance": args.cg_tol}
    smoothing = {}
    if getattr(args, "kernel", None) is not None:
        smoothing["kernel"] = args.kernel
    if getattr(args, "bandwidth", None) is not None:
        smoothing["bandwidth"] = args.bandwidth
    if smoothing:
        over["smoothing"] = smoothing
    win = getattr(args, "window", None)
    if win is not None:
        if win in ("auto", "full"):
            over["fit_window"] = {"mode": win}
        else:
            try:
                lo, hi = (float(v) for v in win.split(":"))
            except ValueError as exc:
                raise ConfigError(f"--window expects 'lo:hi' or 'auto'/'full', got {win!r}") from exc
            over["fit_window"] = {"mode": "explicit", "t_lo": lo, "t_hi": hi}
    return over


def _build_config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        data = load_config_file(args.config)
    data = merge_config(data, _overrides_from_args(args))
    return RunConfig.from_dict(data)


def _out_dir(args, cfg: RunConfig) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if cfg.raw["output_dir"]:
        return Path(cfg.raw["output_dir"])
    return Path("runs") / cfg.raw["label"]


def _cmd_simulate(args) -> int:
    cfg = _build_config(args)
    result = simulate_run(cfg, _out_dir(args, cfg))
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    s = result.summary
    print(f"wrote {result.out_dir}/observables.csv "
          f"({len(result.series.records)} records)")
    print(f"mean fit  A = {s.mean_slope:.6g}  B = {s.mean_intercept:.6g}  r = {s.mean_r:.6g}")
    print(f"sigma fit A1 = {s.sigma_slope:.6g}  B1 = {s.sigma_intercept:.6g}  r1 = {s.sigma_r:.6g}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _build_config(args)
    rows = sweep_run(cfg, args.a2_list, _out_dir(args, cfg), jobs=args.jobs)
    failed = [r for r in rows if r[-1] != "ok"]
    print(f"sweep complete: {len(rows) - len(failed)} ok, {len(failed)} failed")
    for row in rows:
        print(f"  a2={row[0]:g}: {row[-1]}")
    return 0


def _cmd_convergence(args) -> int:
    cfg = _build_config(args)
    convergence_run(cfg, dt_list=args.dt_list, h_list=args.h_list,
                    out_dir=_out_dir(args, cfg))
    return 0


def _cmd_oracle_check(args) -> int:
    cfg = _build_config(args)
    if args.threshold is not None:
        cfg = RunConfig.from_dict(merge_config(cfg.to_dict(),
                                               {"oracle_check": {"threshold": args.threshold}}))
    oracle_check_run(cfg, _out_dir(args, cfg))
    return 0


def _cmd_trend(args) -> int:
    cfg = _build_config(args)
    out = Path(args.out) if args.out else Path(args.observables).parent
    trend_rerun(args.observables, cfg, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgsim",
        description="1D Klein-Gordon wave-packet simulator (P1 FEM + Newmark)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run one simulation per barrier height")
    _add_common(p)
    p.add_argument("--a2-list", type=_float_list, required=True, dest="a2_list",
                   help="comma-separated barrier heights")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("convergence", help="refinement study against the spectral reference")
    _add_common(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--dt-list", type=_float_list, dest="dt_list")
    group.add_argument("--h-list", type=_float_list, dest="h_list")
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("oracle-check", help="FEM vs spectral reference discrepancy")
    _add_common(p)
    p.add_argument("--threshold", type=float, help="failure threshold on the final-time error")
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("trend", help="re-analyze an existing observables.csv")
    _add_common(p)
    p.add_argument("--observables", required=True, help="path to observables.csv")
    p.set_defaults(func=_cmd_trend)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
