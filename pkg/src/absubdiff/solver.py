r"""Implicit solver for the AB sub-diffusion equation

.. math::

    u_t = \partial_x^2 D_{*t}^{1-\alpha} u + F(x, t, u), \qquad 0 < x < a,\ 0 < t \le T,

with ``u(x, 0) = phi(x)``, ``u(0, t) = lam(t)``, ``u(a, t) = mu(t)``.

Time is discretised by backward Euler, the order ``1 - alpha`` AB derivative
by the product-integration weights of :mod:`absubdiff.fracops` (never
truncated) and ``d^2/dx^2`` by the three-point difference. At each level the
unknown part of the nonlocal term is ``c * u^n`` with a constant ``c > 0``, so
every step solves one strictly diagonally dominant M-matrix system.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, GridMismatchError, SingularSystemError, SolverError
from .fracops import TimeGrid, ab_derivative_values, rl_derivative_values
from .mlf import MlParams, ml_eval, ml_primitive

log = logging.getLogger(__name__)

#: Admissible orders are kept this far from 0 and 1.
ALPHA_MARGIN = 1e-4


@dataclass(frozen=True)
class SpaceTimeGrid:
    a: float
    t_end: float
    n_x: int
    n_t: int

    def __post_init__(self):
        if not (self.a > 0.0 and self.t_end > 0.0 and math.isfinite(self.a) and math.isfinite(self.t_end)):
            raise DomainError("domain length and final time must be positive and finite")
        if int(self.n_x) != self.n_x or self.n_x < 3:
            raise DomainError(f"n_x={self.n_x!r} must be an integer >= 3")
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise DomainError(f"n_t={self.n_t!r} must be an integer >= 2")

    @property
    def dx(self) -> float:
        return self.a / self.n_x

    @property
    def dt(self) -> float:
        return self.t_end / self.n_t

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_x + 1) * self.dx

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t + 1) * self.dt

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_t + 1, self.n_x + 1)

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.t_end, self.n_t)


def _broadcast(value, shape) -> np.ndarray:
    return np.array(np.broadcast_to(np.asarray(value, dtype=float), shape))


@dataclass(frozen=True)
class ProblemSpec:
    """Data of one initial-boundary-value problem.

    The callables are evaluated on numpy arrays: ``phi(x)``, ``lam(t)``,
    ``mu(t)`` and ``forcing(x, t, u)`` with array ``x``/``u`` and scalar ``t``.
    Constant results are broadcast.
    """

    alpha: float
    grid: SpaceTimeGrid
    phi: Callable
    lam: Callable
    mu: Callable
    forcing: Callable
    linear: bool = True
    compat_tol: float = 1e-8
    strict: bool = False
    label: str = ""

    def __post_init__(self):
        if not (ALPHA_MARGIN <= self.alpha <= 1.0 - ALPHA_MARGIN):
            raise DomainError(f"alpha={self.alpha!r} outside [{ALPHA_MARGIN}, {1 - ALPHA_MARGIN}]")
        mismatch = self.compatibility_gap()
        if mismatch > self.compat_tol:
            msg = f"initial and boundary data disagree at the corners by {mismatch:.3g}"
            if self.strict:
                raise DomainError(msg)
            warnings.warn(msg, stacklevel=3)

    @property
    def order(self) -> float:
        """Order ``1 - alpha`` of the AB derivative in the equation."""
        return 1.0 - self.alpha

    def phi_values(self) -> np.ndarray:
        x = self.grid.x
        return _broadcast(self.phi(x), x.shape)

    def lam_values(self) -> np.ndarray:
        t = self.grid.t
        return _broadcast(self.lam(t), t.shape)

    def mu_values(self) -> np.ndarray:
        t = self.grid.t
        return _broadcast(self.mu(t), t.shape)

    def forcing_values(self, x, t, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _broadcast(self.forcing(x, t, np.asarray(u, dtype=float)), x.shape)

    def compatibility_gap(self) -> float:
        a = self.grid.a
        phi = _broadcast(self.phi(np.array([0.0, a])), (2,))
        lam0 = float(_broadcast(self.lam(np.array([0.0])), (1,))[0])
        mu0 = float(_broadcast(self.mu(np.array([0.0])), (1,))[0])
        return max(abs(phi[0] - lam0), abs(phi[1] - mu0))

    def with_phi(self, phi: Callable, label: str | None = None) -> ProblemSpec:
        return ProblemSpec(
            self.alpha, self.grid, phi, self.lam, self.mu, self.forcing,
            self.linear, self.compat_tol, self.strict, self.label if label is None else label,
        )


@dataclass(frozen=True)
class SolverConfig:
    picard_tol: float = 1e-10
    picard_max: int = 100
    damping: float = 1.0
    #: first Picard iterate: "previous" time level or "zero"
    picard_start: str = "previous"

    def __post_init__(self):
        if not self.picard_tol > 0.0:
            raise DomainError("picard_tol must be positive")
        if int(self.picard_max) != self.picard_max or self.picard_max < 1:
            raise DomainError("picard_max must be an integer >= 1")
        if not (0.0 < self.damping <= 1.0):
            raise DomainError("damping must lie in (0, 1]")
        if self.picard_start not in ("previous", "zero"):
            raise DomainError("picard_start must be 'previous' or 'zero'")


@dataclass
class Field:
    """Values ``u(x_i, t_n)`` stored as ``values[n, i]`` (time levels are rows)."""

    grid: SpaceTimeGrid
    values: np.ndarray
    picard_iterations: list[int] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")


@dataclass(frozen=True)
class HistoryWeights:
    """AB weights of order ``1 - alpha``: ``w_{n,j} = kernel[n - j] / alpha``.

    ``kernel[m]`` is the mean of the Mittag-Leffler kernel over the m-th step
    back; ``current`` is the coefficient of the unknown level, ``kernel[1] / alpha``.
    """

    alpha: float
    dt: float
    kernel: np.ndarray = field(repr=False)
    current: float = 0.0

    def weight(self, n: int, j: int) -> float:
        if not 0 <= j < n:
            raise IndexError("history weights exist for 0 <= j < n only")
        return self.kernel[n - j] / self.alpha


def history_weights(alpha: float, n_t: int, dt: float) -> HistoryWeights:
    beta = 1.0 - alpha
    lam_beta = beta / (1.0 - beta)
    p = np.array([ml_primitive(beta, lam_beta, m * dt) for m in range(n_t + 1)])
    kernel = np.zeros(n_t + 1)
    kernel[1:] = np.diff(p) / dt
    return HistoryWeights(alpha, dt, kernel, kernel[1] / alpha)


def tridiagonal_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas elimination for a strictly diagonally dominant tridiagonal system.

    ``lower[i]`` multiplies ``x[i-1]`` and ``upper[i]`` multiplies ``x[i+1]``;
    ``lower[0]`` and ``upper[-1]`` are ignored.
    """
    b = np.array(diag, dtype=float)
    d = np.array(rhs, dtype=float)
    lo = np.array(lower, dtype=float)
    up = np.array(upper, dtype=float)
    n = b.size
    if not (lo.size == up.size == d.size == n):
        raise ValueError("tridiagonal bands and rhs must have equal length")
    off = np.abs(lo) + np.abs(up)
    off[0] -= abs(lo[0])
    off[-1] -= abs(up[-1])
    if n > 1 and np.any(np.abs(b) <= off):
        raise SingularSystemError("tridiagonal system is not strictly diagonally dominant")
    if n == 1:
        if b[0] == 0.0:
            raise SingularSystemError("zero pivot")
        return d / b
    c = np.empty(n)
    c[0] = up[0] / b[0]
    d[0] = d[0] / b[0]
    for i in range(1, n):
        pivot = b[i] - lo[i] * c[i - 1]
        if pivot == 0.0:
            raise SingularSystemError(f"zero pivot at row {i}")
        c[i] = up[i] / pivot
        d[i] = (d[i] - lo[i] * d[i - 1]) / pivot
    for i in range(n - 2, -1, -1):
        d[i] -= c[i] * d[i + 1]
    return d


class _Marcher:
    """Holds the per-run constants shared by successive steps."""

    def __init__(self, problem: ProblemSpec, config: SolverConfig):
        g = problem.grid
        self.problem = problem
        self.config = config
        self.weights = history_weights(problem.alpha, g.n_t, g.dt)
        c = self.weights.current
        self.off = -c / g.dx**2
        self.diag = 1.0 / g.dt + 2.0 * c / g.dx**2
        m = g.n_x - 1
        self.lower = np.full(m, self.off)
        self.upper = np.full(m, self.off)
        self.diags = np.full(m, self.diag)

    def history(self, u: np.ndarray, n: int) -> np.ndarray:
        """Known part ``h^n`` of the discrete AB derivative at level ``n`` (all x)."""
        w = self.weights
        h = -w.current * u[n - 1]
        if n >= 2:
            increments = np.diff(u[:n], axis=0)  # levels 0..n-1 give n-1 increments
            h = h + (w.kernel[n:1:-1] @ increments) / w.alpha
        return h

    def step(self, u: np.ndarray, n: int) -> int:
        p, g, cfg = self.problem, self.problem.grid, self.config
        c = self.weights.current
        h = self.history(u, n)
        lap_h = (h[2:] - 2.0 * h[1:-1] + h[:-2]) / g.dx**2
        base = u[n - 1, 1:-1] / g.dt + lap_h
        base[0] += c * u[n, 0] / g.dx**2
        base[-1] += c * u[n, -1] / g.dx**2
        x_in = g.x[1:-1]
        t_n = g.t[n]

        if p.linear:
            f = p.forcing_values(x_in, t_n, u[n - 1, 1:-1])
            u[n, 1:-1] = tridiagonal_solve(self.lower, self.diags, self.upper, base + f)
            return 0

        current = u[n - 1, 1:-1].copy() if cfg.picard_start == "previous" else np.zeros(g.n_x - 1)
        change = math.inf
        for it in range(1, cfg.picard_max + 1):
            f = p.forcing_values(x_in, t_n, current)
            new = tridiagonal_solve(self.lower, self.diags, self.upper, base + f)
            if not np.all(np.isfinite(new)):
                raise SolverError(f"non-finite iterate at time level {n}", n)
            damped = (1.0 - cfg.damping) * current + cfg.damping * new
            change = float(np.max(np.abs(damped - current)))
            current = damped
            if change <= cfg.picard_tol:
                # keep the undamped solve: it satisfies the step equation up to the lag in F
                u[n, 1:-1] = new
                return it
        raise ConvergenceError(
            f"Picard iteration stalled at time level {n}: last update {change:.3e}", n, change
        )


def initial_field(problem: ProblemSpec) -> Field:
    g = problem.grid
    u = np.zeros(g.shape)
    u[1:, 0] = problem.lam_values()[1:]
    u[1:, -1] = problem.mu_values()[1:]
    # row 0 is phi everywhere, corners included
    u[0, :] = problem.phi_values()
    return Field(g, u)


def step(problem: ProblemSpec, config: SolverConfig, state: Field, n: int) -> Field:
    """Fill time level ``n`` of ``state`` in place (levels ``< n`` must be final)."""
    if not 1 <= n <= problem.grid.n_t:
        raise IndexError(f"time level {n} outside 1..{problem.grid.n_t}")
    its = _Marcher(problem, config).step(state.values, n)
    state.picard_iterations.append(its)
    return state


def solve(problem: ProblemSpec, config: SolverConfig | None = None) -> Field:
    config = config or SolverConfig()
    state = initial_field(problem)
    marcher = _Marcher(problem, config)
    u = state.values
    for n in range(1, problem.grid.n_t + 1):
        try:
            its = marcher.step(u, n)
        except SolverError:
            raise
        except (FloatingPointError, ArithmeticError, ValueError) as exc:
            raise SolverError(f"time level {n}: {exc}", n) from exc
        state.picard_iterations.append(its)
    if not np.all(np.isfinite(u)):
        raise SolverError("solution contains non-finite values")
    log.debug("solved %s on %dx%d grid", problem.label or "problem", problem.grid.n_x, problem.grid.n_t)
    return state


def nonlocal_term(field: Field, alpha: float) -> np.ndarray:
    """Discrete ``D_{*t}^{1-alpha} u`` of every spatial column, via fracops."""
    g = field.grid
    return ab_derivative_values(field.values, 1.0 - alpha, g.dt)


def residual(field: Field, problem: ProblemSpec) -> float:
    """Sup over interior nodes and levels ``n >= 1`` of the discrete PDE defect."""
    g = problem.grid
    if field.grid != g:
        raise GridMismatchError("field and problem live on different grids")
    u = field.values
    w = nonlocal_term(field, problem.alpha)
    u_t = np.diff(u, axis=0) / g.dt
    lap = (w[1:, 2:] - 2.0 * w[1:, 1:-1] + w[1:, :-2]) / g.dx**2
    x_in = g.x[1:-1]
    f = np.stack([problem.forcing_values(x_in, g.t[n], u[n, 1:-1]) for n in range(1, g.n_t + 1)])
    return float(np.max(np.abs(u_t[:, 1:-1] - lap - f)))


def compute_w(field: Field, alpha: float) -> Field:
    """``w = D_{*t}^{1-alpha} u`` on the whole grid; ``w(x, 0) = 0`` by construction."""
    w = nonlocal_term(field, alpha)
    w[0, :] = 0.0
    return Field(field.grid, w)


def w_residual(w: Field, problem: ProblemSpec, u: Field | None = None) -> float:
    """Defect of ``alpha w_t + (1 - alpha) D^alpha w - w_xx - F`` (RL derivative in time).

    Loose diagnostic: the identity holds for the continuous problem, the
    discrete fields satisfy it only up to the truncation error. ``u`` supplies
    the solution for a nonlinear forcing.
    """
    g = problem.grid
    a = problem.alpha
    wv = w.values
    w_t = np.diff(wv, axis=0) / g.dt
    rl = rl_derivative_values(wv, a, g.dt)[1:]
    lap = (wv[1:, 2:] - 2.0 * wv[1:, 1:-1] + wv[1:, :-2]) / g.dx**2
    x_in = g.x[1:-1]
    uv = u.values if u is not None else np.zeros(g.shape)
    f = np.stack([problem.forcing_values(x_in, g.t[n], uv[n, 1:-1]) for n in range(1, g.n_t + 1)])
    defect = a * w_t[:, 1:-1] + (1.0 - a) * rl[:, 1:-1] - lap - f
    return float(np.max(np.abs(defect)))


def heat_limit_gap(problem: ProblemSpec, config: SolverConfig | None = None) -> float:
    """Sup distance between a run at ``alpha = 1 - ALPHA_MARGIN`` and the heat equation.

    In that limit the nonlocal term tends to ``u - phi``, so the comparison
    problem is ``u_t = (u - phi)_xx + F``, marched with the same backward
    Euler/three-point scheme. Diagnostic only.
    """
    config = config or SolverConfig()
    near = ProblemSpec(
        1.0 - ALPHA_MARGIN, problem.grid, problem.phi, problem.lam, problem.mu,
        problem.forcing, problem.linear, problem.compat_tol, False, problem.label,
    )
    frac = solve(near, config).values
    g = problem.grid
    u = initial_field(problem).values
    phi = u[0]
    m = g.n_x - 1
    lo = np.full(m, -1.0 / g.dx**2)
    dg = np.full(m, 1.0 / g.dt + 2.0 / g.dx**2)
    lap_phi = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / g.dx**2
    for n in range(1, g.n_t + 1):
        rhs = u[n - 1, 1:-1] / g.dt - lap_phi
        rhs[0] += u[n, 0] / g.dx**2
        rhs[-1] += u[n, -1] / g.dx**2
        current = u[n - 1, 1:-1]
        for _ in range(config.picard_max if not problem.linear else 1):
            f = problem.forcing_values(g.x[1:-1], g.t[n], current)
            new = tridiagonal_solve(lo, dg, lo, rhs + f)
            done = np.max(np.abs(new - current)) <= config.picard_tol
            current = new
            if done:
                break
        u[n, 1:-1] = current
    return float(np.max(np.abs(frac - u)))


def manufactured_problem(alpha: float, grid: SpaceTimeGrid) -> tuple[ProblemSpec, Callable]:
    """Problem with exact solution ``u = sin(pi x / a) t^2`` and zero initial/boundary data.

    With ``b = 1 - alpha`` the AB derivative of ``t^2`` is
    ``2 t^2 E_{b,3}(-b t^b / (1 - b)) / (1 - b)``, which fixes the forcing.
    Returns the problem and the exact solution ``u(x, t)``.
    """
    a = grid.a
    b = 1.0 - alpha
    lam_b = b / (1.0 - b)
    k2 = (math.pi / a) ** 2
    params = MlParams(b, 3.0)

    def forcing(x, t, u):
        d = 2.0 * t**2 * ml_eval(params, -lam_b * t**b) / (1.0 - b) if t > 0.0 else 0.0
        return np.sin(math.pi * x / a) * (2.0 * t + k2 * d)

    def exact(x, t):
        return np.sin(math.pi * np.asarray(x) / a) * np.asarray(t) ** 2

    zero = lambda *args: 0.0  # noqa: E731
    problem = ProblemSpec(alpha, grid, zero, zero, zero, forcing, True, label="manufactured sin(pi x/a) t^2")
    return problem, exact
