"""Command-line entry points: converge, order, spectrum, trace, ramer.

Every subcommand accepts ``--config FILE`` (flat key = value text) plus flag
overrides.  Exit codes: 0 on success, 2 on configuration errors, 3 when
``--assert`` finds results outside the recorded expectation bands.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .engine import diagonal_entries
from .harness import ConfigError, ExperimentConfig
from .paths import SamplePath, TimeGrid
from .spectral import discretized_L_spectrum


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value experiment file")
    p.add_argument("--field", help="field spec: linear:h1,k1,h2,k2 or id1d")
    p.add_argument("--basis-a", dest="basis_a", help="basis spec for slot a")
    p.add_argument("--basis-b", dest="basis_b", help="basis spec for slot b")
    p.add_argument("--order-a", dest="order_a", help="enumeration order for slot a")
    p.add_argument("--order-b", dest="order_b", help="enumeration order for slot b")
    p.add_argument("--grid", type=int, help="number of grid steps")
    p.add_argument("--paths", type=int, help="ensemble size M")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--schedule", help="comma-separated truncation schedule")
    p.add_argument("--out", help="output CSV path (stdout when omitted)")


def _add_assert_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--assert",
        dest="assert_mode",
        action="store_true",
        help="compare results against the expectations file",
    )
    p.add_argument(
        "--update-expectations",
        action="store_true",
        help="record this run's estimator values as the new expectations",
    )
    p.add_argument("--expectations", help="expectations JSON path (packaged default)")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict[str, str] = {}
    if args.config:
        raw.update(harness.parse_config_file(args.config))
    flag_map = {
        "field": args.field,
        "basis.a": args.basis_a,
        "basis.b": args.basis_b,
        "order.a": args.order_a,
        "order.b": args.order_b,
        "grid": args.grid,
        "paths": args.paths,
        "seed": args.seed,
        "schedule": args.schedule,
        "out": args.out,
    }
    for key, value in flag_map.items():
        if value is not None:
            raw[key] = str(value)
    return harness.config_from_mapping(raw)


def _emit(writer, out: str | None) -> None:
    if out is None:
        writer(sys.stdout)
    else:
        writer(out)


def _handle_expectations(args, cfg, report) -> int:
    if args.update_expectations:
        exp = harness.load_expectations(args.expectations)
        harness.store_expectations(exp, cfg, report)
        harness.save_expectations(exp, args.expectations)
        print(f"expectations updated for key {cfg.key()!r}", file=sys.stderr)
    if args.assert_mode:
        exp = harness.load_expectations(args.expectations)
        failures = harness.compare_with_expectations(exp, cfg, report)
        if failures:
            for msg in failures:
                print(f"assertion failure: {msg}", file=sys.stderr)
            return 3
        print("all estimator rows within expectation bands", file=sys.stderr)
    return 0


def cmd_converge(args) -> int:
    cfg = build_config(args)
    report = harness.run_convergence(cfg)
    _emit(lambda f: harness.emit_report(report, f), cfg.out)
    return _handle_expectations(args, cfg, report)


def _r_table_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + "_rtrajectory" + (p.suffix or ".csv")))


def cmd_order(args) -> int:
    cfg = build_config(args)
    result = harness.run_order_dependence(cfg)
    _emit(lambda f: harness.emit_report(result.report, f), cfg.out)
    r_out = _r_table_path(cfg.out) if cfg.out else None
    _emit(lambda f: harness.emit_r_table(result.r_rows, f), r_out)
    return _handle_expectations(args, cfg, result.report)


def cmd_spectrum(args) -> int:
    cfg = build_config(args)
    fld = harness.resolve_field(cfg)
    if not hasattr(fld, "matrix"):
        raise ConfigError("spectrum requires a linear field")
    report = discretized_L_spectrum(fld, TimeGrid(cfg.grid), args.count)
    _emit(lambda f: harness.emit_spectrum(report, f), cfg.out)
    return 0


def cmd_trace(args) -> int:
    cfg = build_config(args)
    fld = harness.resolve_field(cfg)
    if not fld.constant_jacobian:
        raise ConfigError("trace trajectories are defined for constant-Jacobian fields")
    stages = harness.resolve_stages(
        cfg.basis_a, cfg.order_a, fld.dim, [args.n_max], cfg.grid
    )
    st = stages[0]
    probe = SamplePath.zero(TimeGrid(cfg.grid), fld.dim)
    entries = diagonal_entries(fld, probe, st.family, st.n_elements, st.order)
    trajectory = np.cumsum(entries)

    def write(file):
        close = isinstance(file, (str, Path))
        fh = open(file, "w", newline="") if close else file
        try:
            fh.write("basis,order,n,r\n")
            for i, r in enumerate(trajectory):
                fh.write(f"{st.family.name},{st.order.spec},{i + 1},{format(r, '.17g')}\n")
        finally:
            if close:
                fh.close()

    _emit(write, cfg.out)
    return 0


def cmd_ramer(args) -> int:
    rows = harness.run_ramer_battery(args.max_dim, args.samples, args.seed or 90210)
    _emit(lambda f: harness.emit_ramer(rows, f), args.out)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ogawa-lab",
        description="Monte Carlo laboratory for basis-expansion stochastic integrals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="basis/limit convergence estimators")
    _add_config_flags(p)
    _add_assert_flags(p)
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("order", help="enumeration-order dependence of the trace term")
    _add_config_flags(p)
    _add_assert_flags(p)
    p.set_defaults(fn=cmd_order)

    p = sub.add_parser("spectrum", help="closed-form vs discretized spectrum of DG*DG")
    _add_config_flags(p)
    p.add_argument("--count", type=int, default=8, help="number of modes per block")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("trace", help="renormalization-term trajectory for one basis")
    _add_config_flags(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=64)
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("ramer", help="Gaussian divergence-inequality battery")
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--max-dim", dest="max_dim", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_ramer)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
