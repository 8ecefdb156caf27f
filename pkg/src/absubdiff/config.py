"""Run configurations: one JSON document with sections ``problem``, ``solver``, ``outputs``.

Example::

    {
      "problem": {"alpha": 0.5, "a": 1.0, "t_end": 1.0, "n_x": 40, "n_t": 160,
                  "phi": "4*x*(1-x)", "lambda": "0", "mu": "0", "forcing": "0"},
      "solver": {"picard_tol": 1e-10},
      "outputs": {"field": "u.csv", "report": "report.json", "plot_data": "plot/u"}
    }

Everything is validated before anything is written; problems surface as
:class:`ConfigError`. A report written by ``solve`` embeds the normalised
configuration and is itself accepted as a configuration.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import AbsubdiffError, ConfigError
from .expr import CompiledExpr
from .solver import ProblemSpec, SolverConfig, SpaceTimeGrid

PROBLEM_DEFAULTS: dict[str, Any] = {
    "alpha": None,
    "a": 1.0,
    "t_end": 1.0,
    "n_x": 40,
    "n_t": 160,
    "phi": None,
    "lambda": "0",
    "mu": "0",
    "forcing": "0",
    "strict": False,
    "compat_tol": 1e-8,
    "label": "",
}
SOLVER_DEFAULTS: dict[str, Any] = {
    "picard_tol": 1e-10,
    "picard_max": 100,
    "damping": 1.0,
    "picard_start": "previous",
}
OUTPUT_DEFAULTS: dict[str, Any] = {
    "field": None,
    "report": None,
    "plot_data": None,
    "figures": False,
}

_ROLES = {"phi": ("x",), "lambda": ("t",), "mu": ("t",), "forcing": ("x", "t", "u")}


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    solver: SolverConfig
    outputs: dict[str, Any]
    raw: dict[str, Any]

    def output_path(self, key: str) -> Path | None:
        value = self.outputs.get(key)
        return None if value is None else Path(value)


def _section(doc, name, defaults, required=()):
    given = doc.get(name, {})
    if not isinstance(given, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {', '.join(sorted(unknown))}")
    merged = {**defaults, **given}
    for key in required:
        if merged[key] is None:
            raise ConfigError(f"{name}.{key} is required")
    return merged


def _number(section, key, kind=float):
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return float(value)


def normalise(doc: dict[str, Any]) -> dict[str, Any]:
    """Fill defaults and reject unknown sections or keys; accepts a report too."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    if "checks" in doc and "config" in doc:
        doc = doc["config"]
        if not isinstance(doc, dict):
            raise ConfigError("embedded configuration must be a JSON object")
    unknown = set(doc) - {"problem", "solver", "outputs"}
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    return {
        "problem": _section(doc, "problem", PROBLEM_DEFAULTS, ("alpha", "phi")),
        "solver": _section(doc, "solver", SOLVER_DEFAULTS),
        "outputs": _section(doc, "outputs", OUTPUT_DEFAULTS),
    }


def _compile(section, key):
    source = section[key]
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        source = repr(float(source))
    if not isinstance(source, str):
        raise ConfigError(f"problem.{key} must be an expression string")
    try:
        return CompiledExpr(source, _ROLES[key])
    except ConfigError as exc:
        raise ConfigError(f"problem.{key}: {exc}") from exc


def _check_writable(path: str | None, key: str):
    if path is None:
        return
    if not isinstance(path, str) or not path:
        raise ConfigError(f"outputs.{key} must be a non-empty path")
    parent = Path(path).parent
    probe = parent
    while not probe.exists():
        probe = probe.parent
    if not probe.is_dir() or not os.access(probe, os.W_OK):
        raise ConfigError(f"outputs.{key}: {parent} is not writable")


def build(doc: dict[str, Any], base_dir: Path | None = None) -> RunConfig:
    """Validate a configuration document and construct solver inputs."""
    raw = normalise(copy.deepcopy(doc))
    p, s, o = raw["problem"], raw["solver"], raw["outputs"]
    data = {key: _compile(p, key) for key in _ROLES}
    linear = "u" not in data["forcing"].uses
    try:
        grid = SpaceTimeGrid(_number(p, "a"), _number(p, "t_end"), _number(p, "n_x", int), _number(p, "n_t", int))
        problem = ProblemSpec(
            _number(p, "alpha"), grid, data["phi"], data["lambda"], data["mu"], data["forcing"],
            linear, _number(p, "compat_tol"), bool(p["strict"]), str(p["label"]),
        )
        solver = SolverConfig(
            _number(s, "picard_tol"), _number(s, "picard_max", int), _number(s, "damping"), s["picard_start"]
        )
        # evaluate every datum once on the grid so bad expressions fail here
        for values in (problem.phi_values(), problem.lam_values(), problem.mu_values(),
                       problem.forcing_values(grid.x, 0.0, np.zeros(grid.n_x + 1))):
            if not np.all(np.isfinite(values)):
                raise ConfigError("problem data are not finite on the grid")
    except ConfigError:
        raise
    except (AbsubdiffError, ArithmeticError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if o["figures"] and not o["plot_data"]:
        raise ConfigError("outputs.figures needs outputs.plot_data as the file prefix")
    outputs = dict(o)
    for key in ("field", "report", "plot_data"):
        if outputs[key] is not None and base_dir is not None and not Path(outputs[key]).is_absolute():
            outputs[key] = str(base_dir / outputs[key])
        _check_writable(outputs[key], key)
    return RunConfig(problem, solver, outputs, raw)


def load(path: str | Path) -> RunConfig:
    """Read and validate a configuration (or report) file.

    Relative output paths are taken relative to the current directory.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return build(doc)
