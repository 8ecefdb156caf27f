"""Flat-file formats: field CSV, sampled-function CSV, plot data and JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import ConfigError, GridMismatchError
from .fracops import SampledFunction, TimeGrid
from .report import CheckReport, _jsonable
from .solver import Field, SpaceTimeGrid

REPORT_VERSION = "1"
_FMT = "%.17g"


def _num(v: float) -> str:
    return _FMT % v


def field_to_csv(field: Field) -> str:
    """``x,t,u`` rows, time-major then space, 17 significant digits, LF endings."""
    g = field.grid
    lines = ["x,t,u"]
    for n, t in enumerate(g.t):
        st = _num(t)
        lines.extend(f"{_num(x)},{st},{_num(u)}" for x, u in zip(g.x, field.values[n]))
    return "\n".join(lines) + "\n"


def write_field_csv(field: Field, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(field_to_csv(field))


def read_field_csv(path: str | Path) -> Field:
    """Inverse of :func:`write_field_csv`; the grid is rebuilt from the node lists."""
    data = _read_columns(path, ("x", "t", "u"))
    x_all, t_all, u_all = data
    xs = np.unique(x_all)
    ts = np.unique(t_all)
    n_x, n_t = xs.size - 1, ts.size - 1
    if n_x < 3 or n_t < 2 or u_all.size != xs.size * ts.size:
        raise GridMismatchError(f"{path}: rows do not form a full space-time grid")
    grid = SpaceTimeGrid(float(xs[-1]), float(ts[-1]), n_x, n_t)
    if not (np.array_equal(x_all[: n_x + 1], grid.x) and np.array_equal(t_all[:: n_x + 1], grid.t)):
        raise GridMismatchError(f"{path}: nodes are not uniform or not ordered time-major")
    return Field(grid, u_all.reshape(n_t + 1, n_x + 1))


def _read_columns(path, names):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows or [c.strip() for c in rows[0]] != list(names):
        raise ConfigError(f"{path}: header must be {','.join(names)}")
    try:
        body = np.array([[float(c) for c in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if body.ndim != 2 or body.shape[1] != len(names):
        raise ConfigError(f"{path}: expected {len(names)} columns")
    return body.T


def read_sampled_csv(path: str | Path) -> SampledFunction:
    """Read ``t,f`` samples on a uniform grid starting at 0."""
    t, f = _read_columns(path, ("t", "f"))
    if t.size < 3 or t[0] != 0.0:
        raise ConfigError(f"{path}: need at least 3 samples starting at t = 0")
    grid = TimeGrid(float(t[-1]), t.size - 1)
    if not np.allclose(t, grid.nodes, rtol=0.0, atol=1e-12 * grid.t_end):
        raise ConfigError(f"{path}: sample times must be uniform")
    return SampledFunction(grid, f)


def write_sampled_csv(t: np.ndarray, values: np.ndarray, path: str | Path, name: str = "value") -> None:
    out = io.StringIO()
    out.write(f"t,{name}\n")
    for ti, vi in zip(t, values):
        out.write(f"{_num(ti)},{'nan' if math.isnan(vi) else _num(vi)}\n")
    _write_text(path, out.getvalue())


def write_plot_data(field: Field, prefix: str | Path) -> list[Path]:
    """Whitespace-separated data files.

    ``<prefix>_final.dat`` holds ``x u(x, T)``; ``<prefix>_field.dat`` holds
    ``x t u`` with a blank line between time levels (gnuplot ``splot`` layout).
    """
    g = field.grid
    prefix = Path(prefix)
    final = prefix.with_name(prefix.name + "_final.dat")
    full = prefix.with_name(prefix.name + "_field.dat")
    _write_text(final, "# x u(x,T)\n" + "".join(f"{_num(x)} {_num(u)}\n" for x, u in zip(g.x, field.values[-1])))
    blocks = []
    for n, t in enumerate(g.t):
        blocks.append("".join(f"{_num(x)} {_num(t)} {_num(u)}\n" for x, u in zip(g.x, field.values[n])))
    _write_text(full, "# x t u\n" + "\n".join(blocks))
    return [final, full]


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def summarise(checks: Iterable[CheckReport]) -> dict[str, Any]:
    checks = list(checks)
    passed = sum(c.passed for c in checks)
    not_applicable = sum(not c.applicable for c in checks)
    return {
        "total": len(checks),
        "passed": passed,
        "failed": len(checks) - passed - not_applicable,
        "not_applicable": not_applicable,
        "all_passed": passed == len(checks),
    }


def make_report(checks: Iterable[CheckReport], config: dict[str, Any] | None = None, **extra) -> dict[str, Any]:
    checks = list(checks)
    doc = {
        "version": REPORT_VERSION,
        "config": config,
        "checks": [c.to_dict() for c in checks],
        "summary": summarise(checks),
    }
    doc.update({k: _jsonable(v) if not isinstance(v, (dict, list)) else v for k, v in extra.items()})
    return doc


def write_report(doc: dict[str, Any], path: str | Path) -> None:
    _write_text(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")
