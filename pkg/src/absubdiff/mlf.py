r"""Two-parameter Mittag-Leffler function on the real line.

.. math::

    E_{\alpha,\beta}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\alpha k + \beta)}

Every kernel used by the fractional operators in this package is evaluated
at a non-positive argument, so the negative half-line gets three routes:

* the power series, accepted only when its condition number
  ``sum|terms| / |sum|`` stays below :data:`SERIES_MAX_COND`;
* the asymptotic expansion :math:`-\sum_k z^{-k} / \Gamma(\beta - \alpha k)`,
  accepted only when its smallest term is below round-off;
* otherwise a real integral representation obtained by collapsing the Hankel
  contour of the inverse Laplace transform onto the negative axis, integrated
  with :func:`scipy.integrate.quad` (plus the residue of the two complex poles
  when :math:`1 < \alpha < 2`). For orders very close to 1 the
  integrand has a narrow spike, which is folded and integrated in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning
from scipy.integrate import quad as _scipy_quad

from .errors import DomainError, MLOverflowError, PreconditionError
from .report import CheckReport, Hypothesis

#: Largest accepted ratio ``sum|terms| / |sum|`` for the power series.
SERIES_MAX_COND = 1.0e4

_SERIES_MAX_TERMS = 100_000
_ASYMPTOTIC_MAX_TERMS = 4_000
_TINY = 2.0**-60
_QUAD = dict(epsabs=0.0, epsrel=1e-13, limit=500)
# below this |tan(pi alpha)| the integrand peak is handled analytically
_PEAK_RATIO = 1e-3


@dataclass(frozen=True)
class MlParams:
    """Order ``alpha`` in (0, 2] and shift ``beta`` in (0, 4]."""

    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise DomainError(f"alpha={self.alpha!r} outside (0, 2]")
        if not (0.0 < self.beta <= 4.0):
            raise DomainError(f"beta={self.beta!r} outside (0, 4]")


def rgamma(x: float) -> float:
    """Reciprocal gamma function, zero at the poles of :math:`\\Gamma`."""
    if x > 0.0:
        if x > 171.0:
            return math.exp(-math.lgamma(x))
        return 1.0 / math.gamma(x)
    if x == math.floor(x):
        return 0.0
    # reflection: 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
    return _sinpi(x) * math.exp(math.lgamma(1.0 - x)) / math.pi


def _sinpi(x: float) -> float:
    """sin(pi x), exact at integers and accurate next to them."""
    n = round(x)
    d = x - n  # exact
    if d == 0.0:
        return 0.0
    v = math.sin(math.pi * d)
    return -v if n % 2 else v


def _cospi(x: float) -> float:
    n = round(x)
    d = x - n
    if abs(d) == 0.5:
        return 0.0
    v = math.cos(math.pi * d)
    return -v if n % 2 else v


def quad(func, a, b, **kwargs):
    # the requested tolerance sits below what quad can certify; silence the warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return _scipy_quad(func, a, b, **kwargs)


def ml_eval(p: MlParams, z: float) -> float:
    """Evaluate :math:`E_{\\alpha,\\beta}(z)` for a finite real ``z``.

    Raises :class:`DomainError` for a non-finite argument and
    :class:`MLOverflowError` when the value leaves the double range.
    """
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"Mittag-Leffler argument must be finite, got {z!r}")
    try:
        value = _eval(float(p.alpha), float(p.beta), z)
    except OverflowError as exc:
        raise MLOverflowError(f"E_{{{p.alpha},{p.beta}}}({z}) overflows") from exc
    if not math.isfinite(value):
        raise MLOverflowError(f"E_{{{p.alpha},{p.beta}}}({z}) overflows")
    return value


def mittag_leffler(z, alpha: float, beta: float = 1.0):
    """Convenience wrapper accepting a scalar or an array of arguments."""
    p = MlParams(alpha, beta)
    if np.ndim(z) == 0:
        return ml_eval(p, z)
    return ml_eval_array(p, z)


def ml_eval_array(p: MlParams, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    flat_in, flat_out = z.ravel(), out.ravel()
    for i, zi in enumerate(flat_in):
        flat_out[i] = ml_eval(p, zi)
    return out


def _eval(alpha: float, beta: float, z: float) -> float:
    if z == 0.0:
        return rgamma(beta)
    closed = _closed_form(alpha, beta, z)
    if closed is not None:
        return closed
    if z > 0.0:
        return _series(alpha, beta, z)[0]

    x = -z
    if x ** (1.0 / alpha) <= 40.0:
        value, abs_sum = _series(alpha, beta, z)
        if abs_sum <= SERIES_MAX_COND * abs(value):
            return value
    if alpha not in (1.0, 2.0):
        value = _asymptotic(alpha, beta, x)
        if value is not None:
            return value
        return _integral(alpha, beta, x)
    return _integral_integer_order(alpha, beta, x)


def _closed_form(alpha, beta, z):
    if alpha == 1.0:
        if beta == 1.0:
            return math.exp(z)
        if beta == 2.0:
            return math.expm1(z) / z
    elif alpha == 2.0 and beta in (1.0, 2.0):
        if z > 0.0:
            r = math.sqrt(z)
            return math.cosh(r) if beta == 1.0 else math.sinh(r) / r
        r = math.sqrt(-z)
        return math.cos(r) if beta == 1.0 else math.sin(r) / r
    return None


def _series(alpha, beta, z):
    """Power series summed with :func:`math.fsum`; returns (value, sum of |terms|)."""
    log_abs_z = math.log(abs(z))
    negative = z < 0.0
    terms = []
    abs_sum = 0.0
    previous = math.inf
    for k in range(_SERIES_MAX_TERMS):
        t = math.exp(k * log_abs_z - math.lgamma(alpha * k + beta))
        terms.append(-t if (negative and k % 2) else t)
        abs_sum += t
        # terms are unimodal in k; past the peak, stop once negligible even
        # against the largest accepted cancellation
        if t < previous and t <= _TINY * abs_sum / SERIES_MAX_COND:
            break
        previous = t
    else:
        raise DomainError(f"Mittag-Leffler series did not converge for z={z}")
    return math.fsum(terms), abs_sum


def _asymptotic(alpha, beta, x):
    """Negative-axis asymptotic expansion, or None if it cannot reach round-off."""
    log_x = math.log(x)
    terms = []
    best = math.inf
    for k in range(1, _ASYMPTOTIC_MAX_TERMS):
        y = beta - alpha * k
        if y > 0.0:
            log_env = -k * log_x - math.lgamma(y)
        else:
            log_env = -k * log_x + math.lgamma(1.0 - y) - math.log(math.pi)
        env = math.exp(log_env) if log_env < 700.0 else math.inf
        # z^{-k} = (-1)^k x^{-k}
        sign = -1.0 if k % 2 else 1.0
        terms.append(-sign * math.exp(-k * log_x) * rgamma(y) if env > 0.0 else 0.0)
        s = math.fsum(terms)
        if k >= 2 and s != 0.0 and env <= _TINY * abs(s):
            return s + _pole_term(alpha, beta, x)
        if env > best and k > 2 * (1.0 + beta / alpha):
            return None
        best = min(best, env)
    return None


def _pole_term(alpha, beta, x):
    """Residues at the complex poles s^alpha = -x, present only for 1 < alpha < 2."""
    if alpha <= 1.0:
        return 0.0
    r = x ** (1.0 / alpha)
    phase = math.pi / alpha
    amp = (2.0 / alpha) * x ** ((1.0 - beta) / alpha) * math.exp(r * math.cos(phase))
    return amp * math.cos(r * math.sin(phase) + (1.0 - beta) * phase)


def _integral(alpha, beta, x):
    if beta >= 1.0 + alpha:
        # E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
        return (_eval(alpha, beta - alpha, -x) - rgamma(beta - alpha)) / (-x)
    expo = (1.0 - beta) / alpha
    s1 = _sinpi(1.0 - beta)
    s2 = _sinpi(1.0 - beta + alpha)
    c, s = _cospi(alpha), _sinpi(alpha)
    inv_alpha = 1.0 / alpha

    def smooth(r):
        # r^2 + 2 r x cos(pi a) + x^2, written without cancellation
        return math.exp(-(r**inv_alpha)) * (r * s1 + x * s2) / ((r + x * c) ** 2 + (x * s) ** 2)

    def full(r):
        return r**expo * smooth(r)

    if c < 0.0 and abs(s) < _PEAK_RATIO * -c:
        return _integral_sharp_peak(alpha, beta, x) + _pole_term(alpha, beta, x)

    split = min(x, 40.0**alpha)
    if expo < 0.0:
        head = quad(smooth, 0.0, split, weight="alg", wvar=(expo, 0.0), **_QUAD)[0]
    else:
        head = quad(full, 0.0, split, **_QUAD)[0]
    tail = quad(full, split, math.inf, **_QUAD)[0]
    return (head + tail) / (alpha * math.pi) + _pole_term(alpha, beta, x)


def _integral_sharp_peak(alpha, beta, x):
    """Integral route when alpha is close to 1.

    With ``r0 = -x cos(pi a)`` and ``d = x |sin(pi a)|`` the integrand is

        q(r) [(r - r0) s1 + x cos(pi (1 - b)) sin(pi a)] / ((r - r0)^2 + d^2),
        q(r) = r^((1 - b)/a) exp(-r^(1/a)),

    a spike too narrow for quadrature (the numerator is written so that it
    does not cancel at ``r0``). On ``[r0/2, 3 r0/2]`` the integral is folded
    about ``r0``; the Lorentzian parts and the leading Taylor terms of ``q`` are
    integrated in closed form and only smooth remainders go to ``quad``.
    """
    expo = (1.0 - beta) / alpha
    inv_alpha = 1.0 / alpha
    s1 = _sinpi(1.0 - beta)
    sa = _sinpi(alpha)
    cb = _cospi(1.0 - beta)
    r0 = -x * _cospi(alpha)
    d = x * abs(sa)

    def q(r):
        return r**expo * math.exp(-(r**inv_alpha))

    q0 = q(r0)
    k = expo / r0 - inv_alpha * r0 ** (inv_alpha - 1.0)
    q1 = q0 * k
    q2 = q0 * (k * k - expo / r0**2 - inv_alpha * (inv_alpha - 1.0) * r0 ** (inv_alpha - 2.0))
    h = 0.5 * r0
    atan_term = h - d * math.atan2(h, d)  # int_0^h u^2 / (u^2 + d^2) du

    def odd(u):
        return ((q(r0 + u) - q(r0 - u)) * u - 2.0 * q1 * u * u) / (u * u + d * d)

    def even(u):
        return (q(r0 + u) + q(r0 - u) - 2.0 * q0 - q2 * u * u) / (u * u + d * d)

    def rest(r):
        return math.exp(-(r**inv_alpha)) * ((r - r0) * s1 + x * cb * sa) / ((r - r0) ** 2 + d * d)

    def tail(r):
        return r**expo * rest(r)

    total = 0.0
    if s1 != 0.0:
        total += s1 * (quad(odd, 0.0, h, **_QUAD)[0] + 2.0 * q1 * atan_term)
    lorentz = 2.0 * math.atan2(h, d) / d
    total += x * cb * sa * (quad(even, 0.0, h, **_QUAD)[0] + q2 * atan_term + q0 * lorentz)
    # the r^expo factor may be singular at 0: algebraic weight on the head
    total += quad(rest, 0.0, r0 - h, weight="alg", wvar=(expo, 0.0), **_QUAD)[0]
    total += quad(tail, r0 + h, math.inf, **_QUAD)[0]
    return total / (alpha * math.pi)


def _integral_integer_order(alpha, beta, x):
    """alpha in {1, 2}: fractional integral of E_{alpha,1}, whose closed form is known."""
    if beta < 1.0:
        return rgamma(beta) - x * _eval(alpha, beta + alpha, -x)
    if alpha == 1.0:
        kernel = lambda s: math.exp(-x * s)  # noqa: E731
    else:
        kernel = lambda s: math.cos(math.sqrt(x) * s)  # noqa: E731
    val = quad(kernel, 0.0, 1.0, weight="alg", wvar=(0.0, beta - 2.0), **_QUAD)[0]
    return val * rgamma(beta - 1.0)


def ml_primitive(alpha: float, lam: float, tau: float) -> float:
    r"""Antiderivative :math:`P(\tau) = \tau E_{\alpha,2}(-\lambda\tau^\alpha)`.

    ``P' = E_{alpha,1}(-lam tau^alpha)`` and ``P(0) = 0``; this is the moment
    used by the product-integration weights of the AB derivative.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha={alpha!r} outside (0, 1]")
    if not lam > 0.0:
        raise DomainError(f"lambda={lam!r} must be positive")
    if not tau >= 0.0:
        raise DomainError(f"tau={tau!r} must be nonnegative")
    if tau == 0.0:
        return 0.0
    return tau * ml_eval(MlParams(alpha, 2.0), -lam * tau**alpha)


def ml_primitive_array(alpha: float, lam: float, taus) -> np.ndarray:
    taus = np.asarray(taus, dtype=float)
    return np.array([ml_primitive(alpha, lam, t) for t in taus.ravel()]).reshape(taus.shape)


def ml_complete_monotone_probe(alpha: float, grid) -> CheckReport:
    """Check positivity/monotonicity of E_{a,1}(-tau) and positivity of E_{a,a}(-tau).

    "Nonincreasing" allows an increase of four ulps between neighbours.
    """
    tau = np.asarray(grid, dtype=float)
    if tau.ndim != 1 or tau.size == 0 or np.any(tau <= 0.0) or np.any(np.diff(tau) <= 0.0):
        raise PreconditionError("probe grid must be positive and strictly increasing")
    e1 = ml_eval_array(MlParams(alpha, 1.0), -tau)
    ea = ml_eval_array(MlParams(alpha, alpha), -tau)
    rise = np.diff(e1) - 4.0 * np.finfo(float).eps * np.abs(e1[:-1])
    max_rise = float(rise.max()) if rise.size else -math.inf
    slack = min(float(e1.min()), float(ea.min()), -max_rise)
    passed = bool(e1.min() > 0.0 and ea.min() > 0.0 and max_rise <= 0.0)
    return CheckReport(
        "ML-CM",
        bound=0.0,
        measured=float(min(e1.min(), ea.min())),
        slack=slack,
        passed=passed,
        hypotheses=(Hypothesis("grid positive and increasing", True, float(tau[0])),),
        details={"alpha": alpha, "min_e1": float(e1.min()), "min_ealpha": float(ea.min()), "max_rise": max_rise},
    )
