"""Configuration-driven Monte Carlo experiments with CSV reports.

An experiment is described by a flat key = value text file (keys: ``field``,
``basis.a``, ``basis.b``, ``order.a``, ``order.b``, ``grid``, ``paths``,
``seed``, ``schedule``, ``out``) plus command-line overrides.  All bases and
orders within one experiment consume the same path ensemble (common random
numbers), so cross-basis differences are not drowned in Monte Carlo noise,
and every reduction runs in fixed path order: a (config, seed) pair yields
byte-identical reports across reruns.

Basis specs: ``psi-trig``, ``xi-mixed``, ``haar``, ``plin`` (one
piecewise-linear level per schedule entry), or ``plin:<level>`` (prefixes of
one fixed level).  Pilot-calibrated tolerances live in a versioned
expectations file; it is regenerated only by an explicit
``--update-expectations`` run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .bases import EnumerationOrder, family_from_name, piecewise_linear_basis
from .engine import TruncationStage, diagonal_entries
from .ensemble import EnsembleLedger, build_ensemble_ledgers
from .fields import RamerCheck, VectorField, field_from_name, gaussian_ramer_check
from .paths import RngSpec, SamplePath, TimeGrid


class ConfigError(Exception):
    """Raised for unresolvable names, malformed values, or bad schedules."""


CONFIG_KEYS = (
    "field",
    "basis.a",
    "basis.b",
    "order.a",
    "order.b",
    "grid",
    "paths",
    "seed",
    "schedule",
    "out",
)

DEFAULT_SCHEDULE = (4, 16, 64, 256)


@dataclass(frozen=True)
class ExperimentConfig:
    field: str = "linear:1,0,0,1"
    basis_a: str = "psi-trig"
    basis_b: str | None = None
    order_a: str = "balanced"
    order_b: str | None = None
    grid: int = 4096
    paths: int = 10_000
    seed: int = 8161
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    out: str | None = None

    def key(self) -> str:
        """Canonical identity of the experiment (excludes the output path)."""
        parts = [
            f"field={self.field}",
            f"basis.a={self.basis_a}",
            f"basis.b={self.basis_b or '-'}",
            f"order.a={self.order_a}",
            f"order.b={self.order_b or '-'}",
            f"grid={self.grid}",
            f"paths={self.paths}",
            f"seed={self.seed}",
            "schedule=" + ",".join(str(n) for n in self.schedule),
        ]
        return "|".join(parts)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; '#' starts a comment, blank lines ignored."""
    raw: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        raw[key] = value
    return raw


def _parse_schedule(text: str) -> tuple[int, ...]:
    try:
        schedule = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad schedule {text!r}: {exc}") from None
    return schedule


def config_from_mapping(raw: dict[str, str]) -> ExperimentConfig:
    cfg = ExperimentConfig()
    updates: dict = {}
    for key, value in raw.items():
        if value is None:
            continue
        if key == "field":
            updates["field"] = value
        elif key == "basis.a":
            updates["basis_a"] = value
        elif key == "basis.b":
            updates["basis_b"] = value
        elif key == "order.a":
            updates["order_a"] = value
        elif key == "order.b":
            updates["order_b"] = value
        elif key == "grid":
            updates["grid"] = int(value)
        elif key == "paths":
            updates["paths"] = int(value)
        elif key == "seed":
            updates["seed"] = int(value)
        elif key == "schedule":
            updates["schedule"] = _parse_schedule(value)
        elif key == "out":
            updates["out"] = value
        else:  # pragma: no cover - guarded by CONFIG_KEYS
            raise ConfigError(f"unknown config key {key!r}")
    return replace(cfg, **updates)


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.grid < 1:
        raise ConfigError(f"grid must be >= 1, got {cfg.grid}")
    if cfg.paths < 1:
        raise ConfigError(f"paths must be >= 1, got {cfg.paths}")
    if len(cfg.schedule) == 0:
        raise ConfigError("schedule must be nonempty")
    if any(b <= a for a, b in zip(cfg.schedule, cfg.schedule[1:])):
        raise ConfigError(f"schedule must be strictly increasing, got {cfg.schedule}")


def resolve_field(cfg: ExperimentConfig) -> VectorField:
    try:
        return field_from_name(cfg.field)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def resolve_stages(
    basis_spec: str,
    order_spec: str,
    dim: int,
    schedule: Sequence[int],
    grid: int,
) -> list[TruncationStage]:
    """Turn a basis spec into truncation stages, one per schedule entry.

    ``plin`` reads schedule entries as levels (one finite family each, taken
    in full); any other family reads them as prefix lengths.  Piecewise-
    linear knots must divide the grid so that knots land on grid nodes.
    """
    try:
        order = EnumerationOrder.parse(order_spec)
        if basis_spec == "plin":
            stages = []
            for level in schedule:
                if grid % level != 0:
                    raise ConfigError(
                        f"piecewise-linear level {level} does not divide grid {grid}"
                    )
                fam = piecewise_linear_basis(level, dim)
                fam.labels(1, order)  # fail fast on incompatible orders
                stages.append(TruncationStage(level, fam, dim * level, order))
            return stages
        fam = family_from_name(basis_spec, dim)
        if fam.size is not None:
            for n in schedule:
                if n > fam.size:
                    raise ConfigError(
                        f"schedule entry {n} exceeds the {fam.size} elements of {fam.name}"
                    )
            if grid % (fam.size // dim) != 0:
                raise ConfigError(
                    f"piecewise-linear level {fam.size // dim} does not divide grid {grid}"
                )
        # Fail fast on orders the family cannot enumerate.
        fam.labels(1, order)
        return [TruncationStage(int(n), fam, int(n), order) for n in schedule]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorRow:
    estimator: str
    n: int
    value: float
    stderr: float
    paths: int


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[EstimatorRow, ...]

    def by_estimator(self, name: str) -> list[EstimatorRow]:
        return [r for r in self.rows if r.estimator == name]

    def value(self, name: str, n: int) -> EstimatorRow:
        for r in self.rows:
            if r.estimator == name and r.n == n:
                return r
        raise KeyError(f"no row for estimator {name!r} at n = {n}")


def _mse_row(name: str, n: int, samples: np.ndarray) -> EstimatorRow:
    m = samples.shape[0]
    value = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return EstimatorRow(name, n, value, stderr, m)


def _ledger_rows(led: EnsembleLedger, suffix: str) -> list[EstimatorRow]:
    rows = []
    specs = (
        (f"E[(g_{suffix}-gprime_{suffix})^2]", led.g - led.gprime),
        (f"E[(gprime_{suffix}-strat)^2]", led.gprime - led.strat[:, None]),
        (f"E[(g_{suffix}-strat)^2]", led.g - led.strat[:, None]),
        (f"E[(h_{suffix}-ito)^2]", led.h - led.ito[:, None]),
    )
    for name, diff in specs:
        for idx, n in enumerate(led.schedule):
            rows.append(_mse_row(name, n, diff[:, idx] ** 2))
    return rows


def estimator_rows(
    ledger_a: EnsembleLedger, ledger_b: EnsembleLedger | None
) -> ConvergenceReport:
    """The estimator catalog over one or two common-random-number ledgers."""
    rows = _ledger_rows(ledger_a, "a")
    if ledger_b is not None:
        rows.extend(_ledger_rows(ledger_b, "b"))
        if ledger_a.schedule != ledger_b.schedule:
            raise ConfigError("schedules of basis a and b differ")
        diff = ledger_a.h - ledger_b.h
        for idx, n in enumerate(ledger_a.schedule):
            rows.append(_mse_row("E[(h_a-h_b)^2]", n, diff[:, idx] ** 2))
    return ConvergenceReport(tuple(rows))


def run_convergence(
    cfg: ExperimentConfig, return_ledgers: bool = False
):
    """Run the convergence experiment described by ``cfg``.

    Builds per-path ledgers for basis a (and b, when configured) over one
    shared ensemble and aggregates the estimator catalog; deterministic
    given the seed.
    """
    validate_config(cfg)
    fld = resolve_field(cfg)
    stage_lists = [
        resolve_stages(cfg.basis_a, cfg.order_a, fld.dim, cfg.schedule, cfg.grid)
    ]
    if cfg.basis_b is not None:
        stage_lists.append(
            resolve_stages(
                cfg.basis_b, cfg.order_b or "balanced", fld.dim, cfg.schedule, cfg.grid
            )
        )
    grid = TimeGrid(cfg.grid)
    ledgers = build_ensemble_ledgers(
        fld, stage_lists, grid, cfg.paths, RngSpec(cfg.seed)
    )
    report = estimator_rows(ledgers[0], ledgers[1] if len(ledgers) > 1 else None)
    if return_ledgers:
        return report, ledgers
    return report


@dataclass(frozen=True)
class OrderDependenceResult:
    report: ConvergenceReport
    r_rows: tuple[tuple[str, int, float], ...]  # (order spec, prefix length, r)


def run_order_dependence(cfg: ExperimentConfig) -> OrderDependenceResult:
    """Order-dependence experiment: one family, two enumeration orders.

    Emits the renormalization term as a function of prefix length for both
    orders (at every prefix, since the order dependence is the phenomenon
    under study) next to the usual estimator report.
    """
    validate_config(cfg)
    if cfg.order_b is None:
        raise ConfigError("order dependence needs order.b")
    cfg = replace(cfg, basis_b=cfg.basis_b or cfg.basis_a)
    fld = resolve_field(cfg)
    if not fld.constant_jacobian:
        raise ConfigError("order dependence is defined for constant-Jacobian fields")
    report = run_convergence(cfg)

    n_max = max(cfg.schedule)
    grid = TimeGrid(cfg.grid)
    probe = SamplePath.zero(grid, fld.dim)
    r_rows: list[tuple[str, int, float]] = []
    for basis_spec, order_spec in (
        (cfg.basis_a, cfg.order_a),
        (cfg.basis_b, cfg.order_b),
    ):
        stages = resolve_stages(basis_spec, order_spec, fld.dim, [n_max], cfg.grid)
        st = stages[0]
        entries = diagonal_entries(fld, probe, st.family, st.n_elements, st.order)
        trajectory = np.cumsum(entries)
        r_rows.extend(
            (st.order.spec, i + 1, float(trajectory[i])) for i in range(st.n_elements)
        )
    return OrderDependenceResult(report, tuple(r_rows))


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(x, ".17g")


def emit_report(report: ConvergenceReport, file) -> None:
    """Write ``estimator,n,value,stderr,M`` rows; an empty report is header-only."""
    close = False
    if isinstance(file, (str, Path, bytes)):
        file = open(file, "w", newline="")
        close = True
    try:
        file.write("estimator,n,value,stderr,M\n")
        for r in report.rows:
            file.write(f"{r.estimator},{r.n},{_fmt(r.value)},{_fmt(r.stderr)},{r.paths}\n")
    finally:
        if close:
            file.close()


def parse_report(file) -> ConvergenceReport:
    if isinstance(file, (str, Path, bytes)):
        with open(file, "r", newline="") as fh:
            return parse_report(fh)
    rows = []
    lines = [line.strip() for line in file if line.strip()]
    for line in lines[1:]:
        estimator, n, value, stderr, m = line.split(",")
        rows.append(EstimatorRow(estimator, int(n), float(value), float(stderr), int(m)))
    return ConvergenceReport(tuple(rows))


def emit_r_table(rows: Sequence[tuple[str, int, float]], file) -> None:
    close = False
    if isinstance(file, (str, Path, bytes)):
        file = open(file, "w", newline="")
        close = True
    try:
        file.write("order,n,r\n")
        for order_spec, n, r in rows:
            file.write(f"{order_spec},{n},{_fmt(r)}\n")
    finally:
        if close:
            file.close()


def emit_spectrum(report, file) -> None:
    """Write ``n,j,lambda_closed,lambda_numeric,rel_err`` rows for a SpectrumReport."""
    close = False
    if isinstance(file, (str, Path, bytes)):
        file = open(file, "w", newline="")
        close = True
    try:
        file.write("n,j,lambda_closed,lambda_numeric,rel_err\n")
        rel = report.relative_errors()
        for n in range(report.count):
            for j in (0, 1):
                file.write(
                    f"{n},{j + 1},{_fmt(report.closed[n, j])},"
                    f"{_fmt(report.numeric[n, j])},{_fmt(rel[n, j])}\n"
                )
    finally:
        if close:
            file.close()


# ---------------------------------------------------------------------------
# Gaussian divergence-inequality battery
# ---------------------------------------------------------------------------


def _battery_maps(n: int) -> list[tuple[str, object, object]]:
    c = 0.7

    def const_map(x):
        out = np.zeros_like(x)
        out[:] = c
        return out

    def zero_jac(x):
        return np.zeros(x.shape[:-1] + (n, n))

    def identity_jac(x):
        return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()

    def sin_map(x):
        return 0.5 + 0.8 * np.sin(x)

    def sin_jac(x):
        out = np.zeros(x.shape[:-1] + (n, n))
        idx = np.arange(n)
        out[..., idx, idx] = 0.8 * np.cos(x)
        return out

    cases = [
        ("zero", lambda x: np.zeros_like(x), zero_jac),
        ("identity", lambda x: x, identity_jac),
        ("constant", const_map, zero_jac),
        ("sinusoidal", sin_map, sin_jac),
    ]
    if n >= 2:

        def rot_map(x):
            out = np.zeros_like(x)
            out[:, 0] = np.sin(x[:, 1])
            out[:, 1] = -np.sin(x[:, 0])
            return out

        def rot_jac(x):
            out = np.zeros(x.shape[:-1] + (n, n))
            out[:, 0, 1] = np.cos(x[:, 1])
            out[:, 1, 0] = -np.cos(x[:, 0])
            return out

        cases.append(("rotational", rot_map, rot_jac))
    return cases


@dataclass(frozen=True)
class RamerBatteryRow:
    case: str
    n: int
    check: RamerCheck


def run_ramer_battery(
    max_dim: int = 3, samples: int = 10**5, seed: int = 90210
) -> list[RamerBatteryRow]:
    """Divergence-inequality battery over the standard test maps, n = 1..max_dim."""
    rows = []
    rng = RngSpec(seed)
    for n in range(1, max_dim + 1):
        for case, fn, jac in _battery_maps(n):
            chk = gaussian_ramer_check(fn, jac, n, samples, rng)
            rows.append(RamerBatteryRow(case, n, chk))
    return rows


def emit_ramer(rows: Sequence[RamerBatteryRow], file) -> None:
    close = False
    if isinstance(file, (str, Path, bytes)):
        file = open(file, "w", newline="")
        close = True
    try:
        file.write("case,n,samples,lhs,lhs_se,rhs,rhs_se,holds\n")
        for row in rows:
            c = row.check
            file.write(
                f"{row.case},{row.n},{c.samples},{_fmt(c.lhs)},{_fmt(c.lhs_se)},"
                f"{_fmt(c.rhs)},{_fmt(c.rhs_se)},{int(c.holds())}\n"
            )
    finally:
        if close:
            file.close()


# ---------------------------------------------------------------------------
# expectations file
# ---------------------------------------------------------------------------


def default_expectations_path() -> Path:
    return Path(str(resources.files("ogawa_lab").joinpath("data/expectations.json")))


def load_expectations(path: str | Path | None = None) -> dict:
    p = Path(path) if path is not None else default_expectations_path()
    if not p.exists():
        return {"version": 1, "entries": {}}
    return json.loads(p.read_text())


def store_expectations(
    expectations: dict, cfg: ExperimentConfig, report: ConvergenceReport
) -> dict:
    entry_rows = [
        {"estimator": r.estimator, "n": r.n, "value": r.value, "stderr": r.stderr}
        for r in report.rows
    ]
    expectations.setdefault("entries", {})[cfg.key()] = {
        "paths": cfg.paths,
        "rows": entry_rows,
    }
    return expectations


def save_expectations(expectations: dict, path: str | Path | None = None) -> None:
    p = Path(path) if path is not None else default_expectations_path()
    p.write_text(json.dumps(expectations, indent=1, sort_keys=True) + "\n")


def compare_with_expectations(
    expectations: dict, cfg: ExperimentConfig, report: ConvergenceReport, sigmas: float = 3.0
) -> list[str]:
    """Mismatch messages for rows outside value +- sigmas * (se_old + se_new)."""
    entry = expectations.get("entries", {}).get(cfg.key())
    if entry is None:
        raise ConfigError(f"no expectations recorded for experiment key {cfg.key()!r}")
    stored = {(row["estimator"], row["n"]): row for row in entry["rows"]}
    failures = []
    seen = set()
    for r in report.rows:
        key = (r.estimator, r.n)
        seen.add(key)
        if key not in stored:
            failures.append(f"unexpected row {key}")
            continue
        ref = stored[key]
        band = sigmas * (ref["stderr"] + r.stderr)
        if abs(r.value - ref["value"]) > band:
            failures.append(
                f"{r.estimator} at n={r.n}: value {r.value:.6g} outside "
                f"{ref['value']:.6g} +- {band:.3g}"
            )
    for key in stored:
        if key not in seen:
            failures.append(f"missing row {key}")
    return failures
