r"""Riemann-Liouville and Atangana-Baleanu operators on uniform grids.

All operators use base point 0 and the normalisation :math:`M(\alpha) = 1`.
Sampled data are interpreted as their piecewise-linear interpolant and the
kernels are integrated exactly against it (product integration), so every
operator is linear in the samples. The ``*_values`` variants act along the
first axis of an array and are what the PDE code uses on whole fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridMismatchError
from .mlf import MlParams, ml_eval_array, ml_primitive_array
from .report import CheckReport, Hypothesis

#: Normalisation function M(alpha), fixed to one.
M_ALPHA = 1.0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes ``t_j = j * t_end / n_steps`` for ``j = 0..n_steps``."""

    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise DomainError(f"t_end={self.t_end!r} must be positive and finite")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise DomainError(f"n_steps={self.n_steps!r} must be an integer >= 2")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def __len__(self):
        return self.n_steps + 1


@dataclass(frozen=True)
class SampledFunction:
    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise GridMismatchError(f"expected {len(self.grid)} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("sampled values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, func, grid: TimeGrid) -> SampledFunction:
        t = grid.nodes
        return cls(grid, np.broadcast_to(np.asarray(func(t), dtype=float), t.shape))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)


@dataclass(frozen=True)
class FracOrder:
    """Fractional order strictly inside (0, 1)."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"fractional order {self.alpha!r} must lie strictly inside (0, 1)")

    @property
    def lam(self) -> float:
        """Kernel rate alpha / (1 - alpha) of the AB derivative."""
        return self.alpha / (1.0 - self.alpha)


def _order(alpha) -> FracOrder:
    return alpha if isinstance(alpha, FracOrder) else FracOrder(float(alpha))


def _causal_conv(kernel: np.ndarray, data: np.ndarray) -> np.ndarray:
    """out[n] = sum_{m=0}^{n} kernel[m] * data[n - m] along axis 0."""
    n = data.shape[0]
    if data.ndim == 1:
        return np.convolve(kernel[:n], data)[:n]
    # Toeplitz product keeps the 2-D case vectorised
    idx = np.arange(n)
    lag = idx[:, None] - idx[None, :]
    toeplitz = np.where(lag >= 0, kernel[np.clip(lag, 0, n - 1)], 0.0)
    return toeplitz @ data


# --- Riemann-Liouville -----------------------------------------------------


def rl_integral_values(values: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    """Product-trapezoidal RL integral of order ``alpha > 0`` along axis 0."""
    if not alpha > 0.0:
        raise DomainError(f"RL integral order must be positive, got {alpha!r}")
    values = np.asarray(values, dtype=float)
    n_nodes = values.shape[0]
    k = np.arange(n_nodes, dtype=float)
    # interior weights depend on n - j only: (m+1)^{a+1} - 2 m^{a+1} + (m-1)^{a+1}
    inner = np.zeros(n_nodes)
    inner[0] = 1.0
    if n_nodes > 1:
        m = k[1:]
        inner[1:] = (m + 1.0) ** (alpha + 1.0) - 2.0 * m ** (alpha + 1.0) + (m - 1.0) ** (alpha + 1.0)
    # weight of the j = 0 node: (n-1)^{a+1} - (n - a - 1) n^a
    first = np.zeros(n_nodes)
    first[1:] = (k[1:] - 1.0) ** (alpha + 1.0) - (k[1:] - alpha - 1.0) * k[1:] ** alpha
    scale = dt**alpha / math.gamma(alpha + 2.0)
    out = _causal_conv(inner, values)
    # the convolution used inner[n] for j = 0; swap in the endpoint weight
    out = out - _expand(inner, values.ndim) * values[0] + _expand(first, values.ndim) * values[0]
    out[0] = 0.0
    return scale * out


def _expand(w, ndim):
    return w if ndim == 1 else w.reshape((-1,) + (1,) * (ndim - 1))


def rl_integral(f: SampledFunction, alpha: float) -> SampledFunction:
    r"""Riemann-Liouville integral :math:`I^\alpha f` at every node (order ``alpha > 0``)."""
    return SampledFunction(f.grid, rl_integral_values(f.values, alpha, f.grid.dt))


def rl_derivative_values(values: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    a = _order(alpha).alpha
    n_nodes = values.shape[0]
    m = np.arange(n_nodes, dtype=float)
    # d/dt of I^{1-a} applied to the piecewise-linear interpolant:
    # f_0 t^{-a} / Gamma(1-a) + sum_j slope_j [(t-t_j)^{1-a} - (t-t_{j+1})^{1-a}] / Gamma(2-a)
    b = np.zeros(n_nodes)
    b[1:] = m[1:] ** (1.0 - a) - (m[1:] - 1.0) ** (1.0 - a)
    slopes = np.diff(values, axis=0) / dt
    conv = np.zeros_like(values)
    conv[1:] = _causal_conv(b[1:], slopes)
    out = dt ** (1.0 - a) / math.gamma(2.0 - a) * conv
    with np.errstate(divide="ignore"):
        t_pow = np.where(m > 0, (m * dt) ** (-a), np.nan)
    out = out + _expand(t_pow, values.ndim) * values[0] / math.gamma(1.0 - a)
    out[0] = np.nan
    return out


def rl_derivative(f: SampledFunction, alpha) -> np.ndarray:
    """Riemann-Liouville derivative of order ``alpha`` in (0, 1).

    Returns a plain array because node 0 carries ``nan``: the continuous
    derivative of a function with ``f(0) != 0`` is singular there.
    """
    return rl_derivative_values(f.values, alpha, f.grid.dt)


# --- Atangana-Baleanu ------------------------------------------------------


def ab_kernel(alpha, dt: float, n_steps: int) -> np.ndarray:
    """Convolution weights ``W_m = [P(m dt) - P((m-1) dt)] / dt`` for ``m = 0..n_steps``.

    ``P`` is the exact primitive of the Mittag-Leffler kernel, so ``W_m`` is
    the mean of the kernel over one step; ``W_0`` is unused and set to 0.
    All weights are positive and nonincreasing in ``m``.
    """
    order = _order(alpha)
    p = ml_primitive_array(order.alpha, order.lam, np.arange(n_steps + 1) * dt)
    w = np.zeros(n_steps + 1)
    w[1:] = np.diff(p) / dt
    return w


def ab_derivative_values(values: np.ndarray, alpha, dt: float, kernel: np.ndarray | None = None) -> np.ndarray:
    order = _order(alpha)
    values = np.asarray(values, dtype=float)
    n_nodes = values.shape[0]
    if kernel is None:
        kernel = ab_kernel(order, dt, n_nodes - 1)
    increments = np.diff(values, axis=0)
    out = np.zeros_like(values)
    # D(t_n) = sum_{j<n} (f_{j+1} - f_j) W_{n-j} / (1 - a)
    out[1:] = _causal_conv(kernel[1:], increments) * (M_ALPHA / (1.0 - order.alpha))
    return out


def ab_derivative(f: SampledFunction, alpha) -> SampledFunction:
    """Atangana-Baleanu derivative, exact for the piecewise-linear interpolant of ``f``."""
    return SampledFunction(f.grid, ab_derivative_values(f.values, alpha, f.grid.dt))


def ab_derivative_alt_values(values: np.ndarray, alpha, dt: float) -> np.ndarray:
    order = _order(alpha)
    a, lam = order.alpha, order.lam
    values = np.asarray(values, dtype=float)
    n_nodes = values.shape[0]
    s = np.arange(n_nodes) * dt
    # primitives of K(s) = s^{a-1} E_{a,a}(-lam s^a) and of s K(s):
    #   Q1(s) = s^a E_{a,a+1}(-lam s^a),   Q2(s) = s^{a+1} E_{a,a+2}(-lam s^a)
    z = -lam * s**a
    q1 = s**a * ml_eval_array(MlParams(a, a + 1.0), z)
    q2 = s ** (a + 1.0) * ml_eval_array(MlParams(a, a + 2.0), z)
    sq1 = s * q1
    # per step m (s from (m-1)dt to m dt): M0 = int K, M1 = int s K
    m0 = np.zeros(n_nodes)
    m1 = np.zeros(n_nodes)
    m0[1:] = np.diff(q1)
    m1[1:] = np.diff(sq1 - q2)
    # linear interpolant on that step: weight of the far node f_j is
    # (1/dt) int K (s - s_{j+1}), of the near node f_{j+1} is (1/dt) int K (s_j - s)
    near = np.zeros(n_nodes)
    far = np.zeros(n_nodes)
    near[1:] = (s[1:] * m0[1:] - m1[1:]) / dt
    far[1:] = m0[1:] - near[1:]
    # integral at t_n = sum_{m=1}^{n} far[m] f_{n-m} + near[m] f_{n-m+1}
    integral = _causal_conv(far, values)
    integral[1:] += _causal_conv(near[1:], values[1:])
    e1 = ml_eval_array(MlParams(a, 1.0), z)
    head = (values - _expand(e1, values.ndim) * values[0]) * (M_ALPHA / (1.0 - a))
    out = head - (a / (1.0 - a) ** 2) * integral
    out[0] = 0.0
    return out


def ab_derivative_alt(f: SampledFunction, alpha) -> SampledFunction:
    """AB derivative through its integrated-by-parts form (value of f instead of f')."""
    return SampledFunction(f.grid, ab_derivative_alt_values(f.values, alpha, f.grid.dt))


def ab_integral_values(values: np.ndarray, alpha, dt: float) -> np.ndarray:
    a = _order(alpha).alpha
    values = np.asarray(values, dtype=float)
    return ((1.0 - a) * values + a * rl_integral_values(values, a, dt)) / M_ALPHA


def ab_integral(f: SampledFunction, alpha) -> SampledFunction:
    """Atangana-Baleanu integral ``(1 - a) f + a I^a f``."""
    return SampledFunction(f.grid, ab_integral_values(f.values, alpha, f.grid.dt))


def check_inversion(f: SampledFunction, alpha, tol: float | None = None, c: float = 5.0) -> CheckReport:
    """Compare ``ab_integral(ab_derivative(f))`` with ``f - f(0)``.

    The default tolerance is ``c * dt``.
    """
    order = _order(alpha)
    dt = f.grid.dt
    if tol is None:
        tol = c * dt
    roundtrip = ab_integral_values(ab_derivative_values(f.values, order, dt), order, dt)
    residual = float(np.max(np.abs(roundtrip - (f.values - f.values[0]))))
    return CheckReport(
        "P5",
        bound=tol,
        measured=residual,
        slack=tol - residual,
        passed=residual <= tol,
        hypotheses=(Hypothesis("samples finite", True, float(np.max(np.abs(f.values)))),),
        tol=tol,
        details={"alpha": order.alpha, "n_steps": f.grid.n_steps},
    )
