"""Extremum inequalities for the RL and AB derivatives on sampled functions.

Both discrete derivatives are exact for the piecewise-linear interpolant of
the samples, and that interpolant attains its extremum at the same node, so
the inequalities hold up to round-off; the tolerances only absorb it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import PreconditionError
from .fracops import FracOrder, SampledFunction, TimeGrid, _order, ab_derivative, rl_derivative
from .mlf import MlParams, ml_eval

Kind = Literal["max", "min"]

#: Grid used by :func:`random_c1_family` unless one is given.
STANDARD_GRID = TimeGrid(1.0, 400)


@dataclass(frozen=True)
class ExtremumReport:
    location_index: int
    lhs: float
    rhs: float
    slack: float
    passed: bool
    tol: float
    kind: str = "max"


def rl_default_tol(grid: TimeGrid) -> float:
    return 10.0 * grid.dt


def ab_default_tol(grid: TimeGrid) -> float:
    return 5.0 * grid.dt**2 + 1e-9


def rl_extremum_check(f: SampledFunction, alpha, tol: float | None = None) -> ExtremumReport:
    """RL bound ``D^a f(t0) >= t0^{-a} f(t0) / Gamma(1-a)`` at an interior maximum.

    ``t0`` is the first interior node attaining the maximum over all nodes.
    When ``f(t0) >= 0`` the report additionally requires ``D^a f(t0) >= -tol``.
    """
    a = _order(alpha).alpha
    if tol is None:
        tol = rl_default_tol(f.grid)
    v = f.values
    top = v.max()
    interior = np.flatnonzero(v[1:-1] == top)
    if interior.size == 0:
        raise PreconditionError("maximum is attained only at the end points")
    i0 = int(interior[0]) + 1
    t0 = f.t[i0]
    lhs = float(rl_derivative(f, a)[i0])
    rhs = float(t0**-a * v[i0] / math.gamma(1.0 - a))
    slack = lhs - rhs
    passed = slack >= -tol and (v[i0] < 0.0 or lhs >= -tol)
    return ExtremumReport(i0, lhs, rhs, slack, bool(passed), tol, "max")


def ab_bound(f: SampledFunction, alpha, index: int) -> float:
    """Right-hand side ``E_{a,1}(-a t0^a / (1-a)) (f(t0) - f(0)) / (1-a)``."""
    order = _order(alpha)
    t0 = f.t[index]
    e = ml_eval(MlParams(order.alpha, 1.0), -order.lam * t0**order.alpha)
    return e * (f.values[index] - f.values[0]) / (1.0 - order.alpha)


def ab_extremum_check(f: SampledFunction, alpha, kind: Kind = "max", tol: float | None = None) -> ExtremumReport:
    """AB extremum inequality at the first node attaining the max (or min).

    max: ``D f(t0) >= rhs >= 0``; min: ``D f(t0) <= rhs <= 0``.
    """
    order = _order(alpha)
    if kind not in ("max", "min"):
        raise ValueError(f"kind must be 'max' or 'min', got {kind!r}")
    if tol is None:
        tol = ab_default_tol(f.grid)
    i0 = int(np.argmax(f.values) if kind == "max" else np.argmin(f.values))
    lhs = float(ab_derivative(f, order).values[i0])
    rhs = float(ab_bound(f, order, i0))
    if kind == "max":
        slack, sign_ok = lhs - rhs, rhs >= -tol
    else:
        slack, sign_ok = rhs - lhs, rhs <= tol
    return ExtremumReport(i0, lhs, rhs, slack, bool(slack >= -tol and sign_ok), tol, kind)


def _trig_poly(coeffs: np.ndarray, t: np.ndarray, period: float) -> np.ndarray:
    degree = (len(coeffs) - 1) // 2
    out = np.full_like(t, coeffs[0])
    for k in range(1, degree + 1):
        w = k * math.pi * t / period
        out += coeffs[2 * k - 1] * np.cos(w) + coeffs[2 * k] * np.sin(w)
    return out


def random_c1_family(
    seed: int,
    count: int,
    degree: int,
    grid: TimeGrid = STANDARD_GRID,
    interior_max: bool = True,
) -> list[SampledFunction]:
    """Seeded trigonometric polynomials with coefficients uniform in [-1, 1].

    With ``interior_max`` set, draws whose maximum falls on an end node are
    discarded and redrawn, so every member suits :func:`rl_extremum_check`.
    """
    if count < 1 or degree < 1:
        raise ValueError("count and degree must be at least 1")
    rng = np.random.default_rng(seed)
    t = grid.nodes
    family = []
    while len(family) < count:
        coeffs = rng.uniform(-1.0, 1.0, size=2 * degree + 1)
        values = _trig_poly(coeffs, t, grid.t_end)
        if interior_max and int(np.argmax(values)) in (0, len(t) - 1):
            continue
        family.append(SampledFunction(grid, values))
    return family


__all__ = [
    "ExtremumReport",
    "FracOrder",
    "ab_bound",
    "ab_extremum_check",
    "random_c1_family",
    "rl_extremum_check",
]
