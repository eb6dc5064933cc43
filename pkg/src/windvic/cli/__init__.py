"""Command-line entry point: ``windvic run | sweep | gains``.

Exit codes: 0 success, 2 configuration error, 3 gain synthesis error,
4 simulation fault.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from ..analysis import RunMetrics, comparison_table, compute_metrics
from ..controllers import CONTROLLER_KINDS
from ..engine import run_scenario
from ..errors import ConfigError, WindVicError
from ..gains import LqrWeights, brunovsky_chain, hurwitz_check, lqr
from .output import OutputBundle, atomic_write, write_bundle
from .scenario import Scenario, load_scenario, with_overrides

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SYNTHESIS = 3
EXIT_FAULT = 4


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="windvic", description="Wind turbine virtual inertia simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", nargs="?", help="scenario TOML file (default: bundled single-WTG case)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--dt", type=float, help="integration step in s (record spacing is kept)")
        p.add_argument("--controller", choices=CONTROLLER_KINDS, help="override controller.kind")
        p.add_argument("--seedless", action="store_true", help="accepted for compatibility; runs are deterministic")
        p.add_argument("--no-plots", action="store_true", help="skip SVG output")

    run = sub.add_parser("run", help="simulate one scenario")
    scenario_args(run)

    sweep = sub.add_parser("sweep", help="repeat a scenario over wind speeds")
    scenario_args(sweep)
    sweep.add_argument("--wind", type=_float_list, required=True, help="comma-separated wind speeds, m/s")
    sweep.add_argument("--jobs", type=int, default=None, help="parallel worker processes")

    gains = sub.add_parser("gains", help="synthesize or check OHFT feedback gains")
    gains.add_argument("--n", type=int, default=2, help="chain order (number of WTGs + 1)")
    gains.add_argument("--q", type=_float_list, help="diagonal of Q (default 7,1 for n=2, else ones)")
    gains.add_argument("--alpha", type=float, default=1.0, help="input weight")
    gains.add_argument("--check", type=_float_list, help="report Hurwitz verdict for these gains instead")
    return parser


def _fail(exc: WindVicError) -> int:
    print(f"windvic: error: {exc}", file=sys.stderr)
    return exc.exit_code


def _execute(scn: Scenario, out_dir: Path, name: str) -> tuple[OutputBundle, RunMetrics]:
    ts = run_scenario(scn.config)
    dip_after = scn.config.controller.g.t1
    metrics = compute_metrics(ts, dip_after=dip_after)
    return write_bundle(out_dir, name, ts, metrics, scn.output.plots), metrics


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scn = with_overrides(load_scenario(args.scenario), controller=args.controller, dt=args.dt,
                             plots=False if args.no_plots else None)
        bundle, metrics = _execute(scn, args.out, scn.output.name)
    except WindVicError as exc:
        return _fail(exc)
    sys.stdout.write(metrics.to_text())
    print(f"wrote {bundle.csv}")
    return EXIT_OK


def _sweep_job(scn: Scenario, out_dir: Path, name: str) -> tuple[str, RunMetrics | None, str, int]:
    try:
        _, metrics = _execute(scn, out_dir, name)
        return name, metrics, "", EXIT_OK
    except WindVicError as exc:
        return name, None, str(exc), exc.exit_code


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        base = with_overrides(load_scenario(args.scenario), controller=args.controller, dt=args.dt,
                              plots=False if args.no_plots else None)
        jobs = [(with_overrides(base, wind=v), f"{base.output.name}_v{v:g}") for v in args.wind]
    except WindVicError as exc:
        return _fail(exc)
    out_dir: Path = args.out
    workers = args.jobs or min(len(jobs), 8)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, [j[0] for j in jobs], [out_dir] * len(jobs),
                                    [j[1] for j in jobs]))
    else:
        results = [_sweep_job(s, out_dir, n) for s, n in jobs]

    rows, status = [], EXIT_OK
    for name, metrics, err, code in results:
        if metrics is None:
            print(f"windvic: {name}: {err}", file=sys.stderr)
            status = status or code
        else:
            rows.append((name, metrics))
    if rows:
        table = comparison_table(rows)
        atomic_write(out_dir / f"{base.output.name}_comparison.csv", table)
        sys.stdout.write(table)
    return status


def cmd_gains(args: argparse.Namespace) -> int:
    try:
        if args.check is not None:
            stable, eigs = hurwitz_check(args.check)
            print("stable" if stable else "unstable")
            for ev in np.sort_complex(eigs):
                print(f"  {ev.real:+.6f} {ev.imag:+.6f}j")
            return EXIT_OK if stable else EXIT_SYNTHESIS
        if args.n < 1:
            raise ConfigError("--n must be >= 1")
        if args.q is None:
            weights = LqrWeights(LqrWeights.default(args.n).Q, args.alpha)
        else:
            if len(args.q) != args.n:
                raise ConfigError(f"--q needs {args.n} values, got {len(args.q)}")
            weights = LqrWeights.diagonal(args.q, args.alpha)
        result = lqr(brunovsky_chain(args.n), weights)
    except WindVicError as exc:
        return _fail(exc)
    print(result.gains)
    print(f"riccati residual {result.residual:.3e}", file=sys.stderr)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "gains": cmd_gains}[args.command]
    return handler(args)
