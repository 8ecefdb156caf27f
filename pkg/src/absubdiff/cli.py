"""Command line interface.

Exit status: 0 when every check passes, 1 when a check fails, 2 for a bad
configuration or bad input (nothing is written), 3 when the computation
itself fails (solver non-convergence, overflow, evaluation error).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import config as configmod
from . import fracops, principles, serialization
from .errors import (
    AbsubdiffError,
    ConfigError,
    DomainError,
    ExprEvalError,
    GridMismatchError,
    MLOverflowError,
    PreconditionError,
    SolverError,
)
from .extremum import ab_extremum_check, random_c1_family, rl_extremum_check
from .mlf import MlParams, ml_eval
from .report import CheckReport
from .solver import residual, solve

log = logging.getLogger("absubdiff")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
RESIDUAL_TOL = 1e-9

OPERATORS = {
    "rl_integral": fracops.rl_integral_values,
    "rl_derivative": fracops.rl_derivative_values,
    "ab_derivative": fracops.ab_derivative_values,
    "ab_derivative_alt": fracops.ab_derivative_alt_values,
    "ab_integral": fracops.ab_integral_values,
}


def exit_status(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, DomainError, PreconditionError, GridMismatchError, click.ClickException)):
        return EXIT_CONFIG
    if isinstance(exc, (SolverError, MLOverflowError, ExprEvalError, AbsubdiffError)):
        return EXIT_SOLVER
    raise exc


# --- solve pipeline (shared with sweep workers) --------------------------------


def residual_check(field, problem) -> CheckReport:
    r = residual(field, problem)
    return CheckReport("residual", RESIDUAL_TOL, r, RESIDUAL_TOL - r, r <= RESIDUAL_TOL, (), RESIDUAL_TOL,
                       {"label": problem.label})


def execute(cfg: configmod.RunConfig) -> tuple[int, dict]:
    """Solve, check and write every declared output; returns (exit status, report)."""
    try:
        field = solve(cfg.problem, cfg.solver)
    except AbsubdiffError as exc:
        doc = serialization.make_report([], cfg.raw, error=_error_entry(exc))
        if cfg.outputs["report"]:
            serialization.write_report(doc, cfg.outputs["report"])
        return exit_status(exc), doc
    checks = [residual_check(field, cfg.problem)] + principles.applicable_checks(cfg.problem, field)
    stats = {
        "u_min": float(field.values.min()),
        "u_max": float(field.values.max()),
        "picard_iterations": int(sum(field.picard_iterations)),
    }
    doc = serialization.make_report(checks, cfg.raw, field_stats=stats)
    out = cfg.outputs
    if out["field"]:
        serialization.write_field_csv(field, out["field"])
    if out["plot_data"]:
        serialization.write_plot_data(field, out["plot_data"])
        if out["figures"]:
            from .plotting import render

            render(field, out["plot_data"], cfg.problem.label)
    if out["report"]:
        serialization.write_report(doc, out["report"])
    return (EXIT_OK if doc["summary"]["all_passed"] else EXIT_FAILED), doc


def _error_entry(exc: BaseException) -> dict:
    entry = {"type": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "time_index", None) is not None:
        entry["time_index"] = int(exc.time_index)
    return entry


# --- commands ---------------------------------------------------------------


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose: int):
    """Atangana-Baleanu sub-diffusion: operators, solver and verification harness."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("solve")
@click.option("-c", "--config", "config_path", required=True, type=click.Path(dir_okay=False))
def solve_cmd(config_path: str) -> int:
    """Solve the problem of a JSON run configuration (or re-run a report)."""
    cfg = configmod.load(config_path)
    status, doc = execute(cfg)
    summary = doc["summary"]
    if "error" in doc:
        click.echo(f"error: {doc['error']['message']}", err=True)
    else:
        click.echo(f"{summary['passed']}/{summary['total']} checks passed"
                   f" (u in [{doc['field_stats']['u_min']:.6g}, {doc['field_stats']['u_max']:.6g}])")
    return status


@main.group()
def verify():
    """Run the lemma or theorem verification suites."""


@verify.command("lemmas")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--count", default=100, show_default=True, type=click.IntRange(min=1))
@click.option("--degree", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--alpha", "alphas", default="0.25,0.5,0.75", show_default=True, help="Comma-separated orders.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="CSV destination (default: stdout).")
def verify_lemmas(seed: int, count: int, degree: int, alphas: str, output: str | None) -> int:
    """Extremum inequalities on a seeded random family; one CSV row per check."""
    orders = _parse_floats(alphas, "--alpha")
    for a in orders:
        fracops.FracOrder(a)
    family = random_c1_family(seed, count, degree)
    rows = []
    for k, f in enumerate(family):
        for a in orders:
            for kind, rep in (
                ("rl_max", rl_extremum_check(f, a)),
                ("ab_max", ab_extremum_check(f, a, "max")),
                ("ab_min", ab_extremum_check(-f, a, "min")),
            ):
                rows.append([k, a, kind, rep.lhs, rep.rhs, rep.slack, rep.passed])
    header = ["function_id", "alpha", "kind", "lhs", "rhs", "slack", "passed"]
    text = _csv_text(header, rows)
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)
    failed = sum(not r[-1] for r in rows)
    click.echo(f"{len(rows) - failed}/{len(rows)} lemma checks passed", err=True)
    return EXIT_OK if failed == 0 else EXIT_FAILED


@verify.command("theorems")
@click.option("--seed", type=int, default=None, help="Random instances instead of the canonical ones.")
@click.option("--only", default="", help="Comma-separated theorem ids, e.g. T3.1,C1.")
@click.option("--extended", is_flag=True, help="Add the second canonical instances.")
@click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="JSON report destination.")
def verify_theorems(seed: int | None, only: str, extended: bool, jobs: int, output: str | None) -> int:
    """Maximum principles, uniqueness and continuous dependence experiments."""
    wanted = [s.strip() for s in only.split(",") if s.strip()]
    if seed is None:
        suite = principles.extended_suite() if extended else principles.canonical_suite()
    else:
        suite = principles.random_suite(seed)
    try:
        suite = principles.select(suite, wanted)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    checks = principles.run_suite(suite, jobs)
    meta = {"mode": "canonical" if seed is None else "random", "seed": seed, "only": wanted, "extended": extended}
    doc = serialization.make_report(checks, meta)
    if output:
        serialization.write_report(doc, output)
    click.echo(f"{'id':<6} {'instance':<42} {'bound':>12} {'measured':>12} {'slack':>11}  verdict")
    for exp, c in zip(suite, checks):
        verdict = "pass" if c.passed else ("n/a" if not c.applicable else "FAIL")
        click.echo(f"{c.theorem_id:<6} {exp.name[:42]:<42} {c.bound:>12.5g} {c.measured:>12.5g} {c.slack:>11.3g}  {verdict}")
    s = doc["summary"]
    click.echo(f"{s['passed']}/{s['total']} passed")
    return EXIT_OK if s["all_passed"] else EXIT_FAILED


@main.group()
def mlf():
    """Mittag-Leffler function."""


@mlf.command("eval")
@click.option("--alpha", required=True, type=float)
@click.option("--beta", default=1.0, show_default=True, type=float)
@click.option("--z", "z", required=True, type=float)
def mlf_eval(alpha: float, beta: float, z: float) -> int:
    """Print E_{alpha,beta}(z) with 17 significant digits."""
    click.echo("%.17g" % ml_eval(MlParams(alpha, beta), z))
    return EXIT_OK


@main.group("fracops")
def fracops_group():
    """Fractional operators on sampled data."""


@fracops_group.command("apply")
@click.option("--op", required=True, type=click.Choice(sorted(OPERATORS)))
@click.option("--alpha", required=True, type=float)
@click.option("-i", "--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="CSV destination (default: stdout).")
def fracops_apply(op: str, alpha: float, input_path: str, output: str | None) -> int:
    """Apply an operator to ``t,f`` samples on a uniform grid starting at 0."""
    f = serialization.read_sampled_csv(input_path)
    if op != "rl_integral":
        fracops.FracOrder(alpha)
    values = OPERATORS[op](f.values, alpha, f.grid.dt)
    if output:
        serialization.write_sampled_csv(f.t, values, output, op)
    else:
        rows = [[f"{t:.17g}", "nan" if np.isnan(v) else f"{v:.17g}"] for t, v in zip(f.t, values)]
        click.echo(_csv_text(["t", op], rows), nl=False)
    return EXIT_OK


@main.command("sweep")
@click.option("-c", "--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1))
def sweep_cmd(config_path: str, jobs: int) -> int:
    """Run the cartesian product of parameter variations of a base configuration.

    The sweep file holds ``base`` (a run configuration), ``vary`` (dotted keys
    mapped to value lists), ``output_dir`` and optionally ``summary``.
    """
    docs, keys, combos, summary_path = _expand_sweep(config_path)
    # validate everything before any run writes output
    for doc in docs:
        configmod.build(doc)
    if jobs == 1:
        results = [_sweep_worker(d) for d in docs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, docs))
    header = ["run", *keys, "exit_status", "residual", "u_min", "u_max", "checks_passed", "checks_total"]
    # swept values are echoed as written in the sweep file
    rows = [[k, *(v if isinstance(v, str) else json.dumps(v) for v in combo), *res] for k, (combo, res) in enumerate(zip(combos, results))]
    summary_path.parent.mkdir(parents=True, exist_ok=True)
    summary_path.write_text(_csv_text(header, rows), encoding="utf-8")
    statuses = [r[0] for r in results]
    click.echo(f"{len(docs)} runs, {statuses.count(EXIT_OK)} all-pass; summary in {summary_path}")
    if EXIT_SOLVER in statuses:
        return EXIT_SOLVER
    return EXIT_FAILED if EXIT_FAILED in statuses else EXIT_OK


def _expand_sweep(path):
    try:
        with open(path, encoding="utf-8") as fh:
            sweep = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(sweep, dict) or not isinstance(sweep.get("base"), dict):
        raise ConfigError("sweep file needs a 'base' configuration object")
    unknown = set(sweep) - {"base", "vary", "output_dir", "summary"}
    if unknown:
        raise ConfigError(f"unknown sweep keys: {', '.join(sorted(unknown))}")
    vary = sweep.get("vary", {})
    if not isinstance(vary, dict) or not all(isinstance(v, list) and v for v in vary.values()):
        raise ConfigError("'vary' must map dotted keys to non-empty lists")
    for key in vary:
        if len(key.split(".")) != 2 or key.split(".")[0] not in ("problem", "solver"):
            raise ConfigError(f"cannot vary {key!r}; use problem.<key> or solver.<key>")
    out_dir = Path(sweep.get("output_dir", "sweep_out"))
    summary = Path(sweep.get("summary", out_dir / "summary.csv"))
    keys = list(vary)
    combos = list(itertools.product(*(vary[k] for k in keys)))
    docs = []
    for k, combo in enumerate(combos):
        doc = json.loads(json.dumps(sweep["base"]))
        for key, value in zip(keys, combo):
            section, name = key.split(".")
            doc.setdefault(section, {})[name] = value
        run_dir = out_dir / f"run_{k:03d}"
        doc["outputs"] = {**doc.get("outputs", {}), "field": str(run_dir / "field.csv"),
                          "report": str(run_dir / "report.json")}
        docs.append(doc)
    return docs, keys, combos, summary


def _sweep_worker(doc: dict) -> list:
    cfg = configmod.build(doc)
    status, report = execute(cfg)
    checks = report["checks"]
    res = next((c["measured"] for c in checks if c["theorem_id"] == "residual"), None)
    stats = report.get("field_stats", {})
    return [status, res, stats.get("u_min"), stats.get("u_max"),
            sum(c["passed"] for c in checks), len(checks)]


# --- helpers ------------------------------------------------------------------


def _parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def run(argv: list[str] | None = None) -> int:
    """Run the CLI in-process and return the exit status instead of exiting."""
    try:
        status = main.main(args=argv, prog_name="absubdiff", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except AbsubdiffError as exc:
        click.echo(f"error: {exc}", err=True)
        return exit_status(exc)
    return EXIT_OK if status is None else int(status)


def entry() -> None:
    sys.exit(run(sys.argv[1:]))
