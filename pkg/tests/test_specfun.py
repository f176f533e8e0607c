"""Special-function layer against independent references.

The reference implementations at the top are deliberately naive: an
ascending power series and a modified-Lentz continued fraction, written
from the textbook recurrences with no shared code with the library path
they check. Slow but honest.
"""

import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from underlaysim import specfun
from underlaysim.specfun import (BracketError, ConvergenceError, Tolerance,
                                 find_root, integrate, inv_reg_upper_gamma,
                                 reg_upper_gamma)


def _lower_series(a: float, x: float) -> float:
    # P(a, x) by the ascending series; valid for x < a + 1
    term = 1.0 / a
    total = term
    k = a
    for _ in range(100000):
        k += 1.0
        term *= x / k
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return math.exp(a * math.log(x) - x - math.lgamma(a)) * total


def _upper_lentz(a: float, x: float) -> float:
    # Q(a, x) by the continued fraction; valid for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, 100000):
        coeff = -i * (i - a)
        b += 2.0
        d = coeff * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def q_reference(a: float, x: float) -> float:
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_lentz(a, x)


A_GRID = [0.5, 1.0, 2.0, 10.0, 100.0, 5000.0]


@pytest.mark.parametrize("a", A_GRID)
@pytest.mark.parametrize("ratio", [0.1, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0])
def test_upper_gamma_matches_reference(a, ratio):
    x = a * ratio
    got = reg_upper_gamma(a, x)
    want = q_reference(a, x)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-280)


def test_upper_gamma_edges():
    assert reg_upper_gamma(3.0, 0.0) == 1.0
    assert reg_upper_gamma(1.0, 2.5) == pytest.approx(math.exp(-2.5), rel=1e-12)
    # decreasing in x
    xs = np.linspace(0.0, 30.0, 200)
    vals = reg_upper_gamma(4.2, xs)
    assert np.all(np.diff(vals) <= 0.0)
    assert np.all((vals >= 0.0) & (vals <= 1.0))


@pytest.mark.parametrize("a", A_GRID)
@pytest.mark.parametrize("rho", [0.01, 0.1, 0.5, 0.9, 0.99])
def test_inverse_round_trip(a, rho):
    x = inv_reg_upper_gamma(rho, a)
    assert x > 0.0
    assert reg_upper_gamma(a, x) == pytest.approx(rho, rel=1e-9)
    assert inv_reg_upper_gamma(reg_upper_gamma(a, x), a) == pytest.approx(x, rel=1e-9)


def test_gamma_domain_errors():
    with pytest.raises(ValueError):
        reg_upper_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        reg_upper_gamma(-2.0, 1.0)
    with pytest.raises(ValueError):
        reg_upper_gamma(1.0, -0.5)
    with pytest.raises(ValueError):
        reg_upper_gamma(math.nan, 1.0)
    with pytest.raises(ValueError):
        inv_reg_upper_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        inv_reg_upper_gamma(1.0, 1.0)
    with pytest.raises(ValueError):
        inv_reg_upper_gamma(0.5, -1.0)


def test_integrate_polynomial_is_exact():
    got = integrate(lambda x: x ** 3, 0.0, 1.0)
    assert got == pytest.approx(0.25, abs=1e-14)


def test_integrate_smooth_against_quad():
    cases = [
        (lambda x: np.exp(-x) * np.sin(x), 0.0, 20.0),
        (lambda x: 1.0 / (1.0 + x * x), -4.0, 7.0),
        (lambda x: np.cos(3.0 * x) * np.exp(-0.5 * x * x), -8.0, 8.0),
    ]
    for f, lo, hi in cases:
        ref, ref_err = scipy.integrate.quad(f, lo, hi)
        assert integrate(f, lo, hi) == pytest.approx(ref, abs=max(1e-10, 10 * ref_err))


def test_integrate_semi_infinite():
    assert integrate(lambda x: np.exp(-x), 0.0, math.inf) == pytest.approx(1.0, rel=1e-10)
    assert integrate(lambda x: np.sin(x) * np.exp(-x), 0.0, math.inf) == pytest.approx(0.5, rel=1e-9)
    # mass far from the lower limit needs the hint
    f = lambda x: np.exp(-0.5 * ((x - 1000.0) / 2.0) ** 2) / (2.0 * math.sqrt(2.0 * math.pi))
    assert integrate(f, 0.0, math.inf, scale_hint=1000.0) == pytest.approx(1.0, rel=1e-9)


def test_integrate_sharp_peak():
    mu, sd = 3.7, 0.013
    f = lambda x: np.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
    assert integrate(f, 0.0, 10.0) == pytest.approx(1.0, rel=1e-9)


def test_integrate_endpoint_singularity():
    # integrable log blowup at the lower end; nodes never touch it
    assert integrate(lambda x: -np.log(x), 0.0, 1.0) == pytest.approx(1.0, rel=1e-7)


def test_integrate_reports_nonconvergence():
    tol = Tolerance(abs_tol=1e-15, rel_tol=1e-15, max_iter=3)
    with pytest.raises(ConvergenceError) as exc:
        integrate(lambda x: np.exp(-x) * np.cos(40.0 * x), 0.0, math.inf, tol)
    assert math.isfinite(exc.value.estimate)
    assert exc.value.error_bound > 0.0


def test_integrate_rejects_nonfinite_integrand():
    with pytest.raises(ValueError):
        integrate(lambda x: np.where(x > 0.5, np.inf, 1.0), 0.0, 1.0)


@given(coeffs=st.lists(st.floats(-5.0, 5.0), min_size=4, max_size=4),
       lo=st.floats(-3.0, 3.0), width=st.floats(0.1, 4.0))
@settings(deadline=None, max_examples=60)
def test_integrate_cubics_match_antiderivative(coeffs, lo, width):
    c0, c1, c2, c3 = coeffs
    hi = lo + width

    def f(x):
        return c0 + x * (c1 + x * (c2 + x * c3))

    def big_f(x):
        return x * (c0 + x * (c1 / 2.0 + x * (c2 / 3.0 + x * c3 / 4.0)))

    assert integrate(f, lo, hi) == pytest.approx(big_f(hi) - big_f(lo), abs=1e-9)


def test_find_root_cubic():
    root = find_root(lambda x: x ** 3 - 2.0, 0.0, 2.0)
    assert root == pytest.approx(2.0 ** (1.0 / 3.0), rel=1e-9)


def test_find_root_endpoint_zero():
    assert find_root(lambda x: x - 1.5, 1.5, 9.0) == 1.5
    assert find_root(lambda x: x - 9.0, 1.5, 9.0) == 9.0


def test_find_root_requires_sign_change():
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1.0, -3.0, 3.0)


@given(c=st.floats(-50.0, 50.0))
@settings(deadline=None, max_examples=60)
def test_find_root_affine(c):
    root = find_root(lambda x: x - c, c - 2.0, c + 3.0)
    assert root == pytest.approx(c, abs=1e-8)


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(abs_tol=0.0, rel_tol=1e-8, max_iter=50)
    with pytest.raises(ValueError):
        Tolerance(abs_tol=1e-10, rel_tol=-1.0, max_iter=50)
    with pytest.raises(ValueError):
        Tolerance(abs_tol=1e-10, rel_tol=1e-8, max_iter=0)
