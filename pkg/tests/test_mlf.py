import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx

from absubdiff.errors import DomainError, MLOverflowError, PreconditionError
from absubdiff.mlf import (
    MlParams,
    ml_complete_monotone_probe,
    ml_eval,
    ml_eval_array,
    ml_primitive,
    mittag_leffler,
)
from oracles import ml_reference, ml_series


@pytest.mark.parametrize(
    "alpha, beta, z, expected",
    [
        (0.5, 1.0, 0.0, 1.0),
        (1.0, 1.0, 1.0, 2.718281828459045),
        (2.0, 1.0, 1.0, 1.5430806348152437),
    ],
)
def test_exact_values(alpha, beta, z, expected):
    assert ml_eval(MlParams(alpha, beta), z) == pytest.approx(expected, rel=1e-15)


def test_half_order_matches_scaled_erfc():
    # E_{1/2,1}(-x) = exp(x^2) erfc(x), evaluated by an independent routine
    assert ml_eval(MlParams(0.5), -1.0) == pytest.approx(erfcx(1.0), rel=1e-14)
    assert erfcx(1.0) == pytest.approx(0.4275835761558070, rel=1e-15)


def test_zero_argument_is_reciprocal_gamma():
    for beta in (0.3, 1.0, 2.5, 4.0):
        assert ml_eval(MlParams(0.7, beta), 0.0) == pytest.approx(1.0 / math.gamma(beta), rel=1e-15)


def _cases():
    rng = np.random.default_rng(20240611)
    cases = []
    for _ in range(60):
        alpha = float(rng.uniform(0.05, 2.0))
        beta = float(rng.uniform(0.05, 4.0))
        z = float(rng.uniform(-50.0, 5.0))
        cases.append((round(alpha, 4), round(beta, 4), round(z, 4)))
    # route boundaries: series/asymptotic/integral switch points
    cases += [(0.5, 1.0, -40.0**0.5), (0.25, 0.25, -1.0), (0.9, 1.9, -12.0), (1.0, 0.5, -30.0),
              (2.0, 3.0, -20.0), (1.0, 3.5, -50.0), (0.1, 0.1, -50.0), (1.99, 1.0, -50.0)]
    return cases


@pytest.mark.parametrize("alpha, beta, z", _cases())
def test_relative_accuracy_against_high_precision_reference(alpha, beta, z):
    ref = ml_reference(alpha, beta, z)
    got = ml_eval(MlParams(alpha, beta), z)
    assert abs(got - ref) <= 1e-10 * abs(ref) + 1e-300


def test_exponential_on_whole_interval():
    z = np.linspace(-10.0, 10.0, 1000)
    got = ml_eval_array(MlParams(1.0, 1.0), z)
    assert np.max(np.abs(got - np.exp(z)) / np.exp(z)) <= 1e-12


# z <= 1 keeps E finite for every order (it grows like exp(z^(1/alpha)))
@given(st.floats(0.05, 1.0), st.floats(0.05, 3.0), st.floats(-40.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_shift_recurrence(alpha, beta, z):
    # E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z); the two sides use different routes
    lhs = ml_eval(MlParams(alpha, beta), z)
    rhs = 1.0 / math.gamma(beta) + z * ml_eval(MlParams(alpha, alpha + beta), z)
    scale = max(abs(lhs), 1.0 / math.gamma(beta), abs(z * ml_eval(MlParams(alpha, alpha + beta), z)))
    assert abs(lhs - rhs) <= 1e-10 * scale


def test_deterministic_bitwise():
    p = MlParams(0.37, 1.3)
    vals = [ml_eval(p, -17.3) for _ in range(3)]
    assert vals[0] == vals[1] == vals[2]


def test_array_and_scalar_wrapper_agree():
    z = np.array([[-1.0, -2.0], [0.5, -30.0]])
    arr = mittag_leffler(z, 0.6, 1.1)
    assert arr.shape == z.shape
    assert arr[1, 1] == mittag_leffler(-30.0, 0.6, 1.1)


@pytest.mark.parametrize("alpha, beta", [(0.0, 1.0), (2.1, 1.0), (0.5, 0.0), (0.5, 4.5), (-1.0, 1.0)])
def test_envelope_rejected(alpha, beta):
    with pytest.raises(DomainError):
        MlParams(alpha, beta)


def test_non_finite_argument_rejected():
    with pytest.raises(DomainError):
        ml_eval(MlParams(0.5), math.nan)


def test_overflow_reported():
    with pytest.raises(MLOverflowError):
        ml_eval(MlParams(1.0, 1.0), 1000.0)
    with pytest.raises(MLOverflowError):
        ml_eval(MlParams(0.5, 1.0), 700.0)


# --- primitive ----------------------------------------------------------------


def test_primitive_at_zero():
    assert ml_primitive(0.5, 1.0, 0.0) == 0.0


@pytest.mark.parametrize("alpha, lam", [(0.2, 0.25), (0.5, 1.0), (0.9, 9.0), (1.0, 2.0)])
def test_primitive_derivative_is_kernel(alpha, lam):
    h = 1e-5
    for tau in (0.05, 0.4, 1.0, 3.0):
        slope = (ml_primitive(alpha, lam, tau + h) - ml_primitive(alpha, lam, tau - h)) / (2 * h)
        kernel = ml_eval(MlParams(alpha, 1.0), -lam * tau**alpha)
        assert slope == pytest.approx(kernel, rel=1e-7)


def test_primitive_nondecreasing():
    taus = np.linspace(0.0, 20.0, 2001)
    p = [ml_primitive(0.3, 0.3 / 0.7, t) for t in taus]
    assert np.all(np.diff(p) > 0.0)


@pytest.mark.parametrize("args", [(0.5, 1.0, -0.1), (0.5, 0.0, 1.0), (1.5, 1.0, 1.0)])
def test_primitive_domain(args):
    with pytest.raises(DomainError):
        ml_primitive(*args)


# --- complete monotonicity probe -------------------------------------------------


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_complete_monotone_probe(alpha):
    report = ml_complete_monotone_probe(alpha, np.geomspace(1e-3, 50.0, 200))
    assert report.passed and report.applicable
    assert report.details["min_e1"] > 0.0


def test_probe_rejects_bad_grid():
    with pytest.raises(PreconditionError):
        ml_complete_monotone_probe(0.5, [0.0, 1.0])
    with pytest.raises(PreconditionError):
        ml_complete_monotone_probe(0.5, [2.0, 1.0])


@pytest.mark.parametrize("alpha", [1 - 1e-16, 1 - 1e-9, 1 + 1e-7, 1 - 4e-6, 0.9999, 1.0003])
@pytest.mark.parametrize("beta", [0.3, 1.0, 1.7])
def test_orders_next_to_one(alpha, beta):
    # the integral route has a near-singular spike here
    for z in (-5.0, -50.0):
        ref = ml_series(alpha, beta, z, dps=120, terms=1500)
        assert ml_eval(MlParams(alpha, beta), z) == pytest.approx(ref, rel=1e-10)
