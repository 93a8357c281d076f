import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from frachardy.constants import (
    _c_integrand,
    a_ratio,
    constant_A,
    constant_A_argmin,
    constant_A_search,
    constant_C,
    constant_Cp,
    constant_cp,
    constant_D,
    constant_D_unweighted,
    cp_objective,
    d_prefactor,
    phi,
    phi_sphere_integrand,
)
from frachardy.functionals import potential_pv
from frachardy.model import FractionalParams, RegimeError
from frachardy.quadrature import Method, QuadratureSpec

GRID_SP = [(s, p) for s in (0.6, 0.8, 0.95) for p in (1.2, 1.5, 1.8)]
WEIGHTS = [(0.0, 0.0), (0.1, -0.2), (0.3, 0.3)]


def _valid(d, s, p, a, b, regime):
    from frachardy.model import validate
    try:
        P = FractionalParams(d, s, p, a, b)
        validate(P, regime)
        return P
    except RegimeError:
        return None


# ---------------------------------------------------------------------------
# Phi


def test_phi_examples():
    assert phi(FractionalParams(1, 0.5, 1.5), 0.0) == pytest.approx(2.0, rel=1e-15)
    assert phi(FractionalParams(3, 0.5, 1.5), 0.0) == pytest.approx(4 * math.pi, rel=1e-12)
    with pytest.raises(ValueError):
        phi(FractionalParams(2, 0.5, 1.5), 1.0)


@pytest.mark.parametrize("s, p, r", [(0.5, 1.5, 0.5), (0.8, 1.8, 0.9), (0.3, 1.2, 0.99)])
def test_phi_d3_closed_form(s, p, r):
    # in d = 3 the t-integral has an elementary antiderivative
    lam = 3 + s * p
    exact = 2 * math.pi * ((1 + r) ** (2 - lam) - (1 - r) ** (2 - lam)) / ((2 - lam) * r)
    assert phi(FractionalParams(3, s, p), r) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("s, p, r", [(0.5, 1.5, 0.5), (0.9, 1.9, 0.95)])
def test_phi_d2_against_mpmath(s, p, r):
    lam = 2 + s * p
    mp.mp.dps = 30
    exact = mp.quad(lambda th: (1 - 2 * r * mp.cos(th) + r * r) ** (-lam / 2), [0, mp.pi, 2 * mp.pi])
    assert phi(FractionalParams(2, s, p), r) == pytest.approx(float(exact), rel=1e-10)


@pytest.mark.parametrize("d", [2, 3])
def test_phi_against_monte_carlo_sphere(d):
    P = FractionalParams(d, 0.5, 1.5)
    rng = np.random.default_rng(11)
    n = 400_000
    g = rng.standard_normal((n, d))
    omega = g / np.linalg.norm(g, axis=1, keepdims=True)
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    vals = area * phi_sphere_integrand(P, 0.5)(omega)
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(n)
    assert abs(phi(P, 0.5) - mean) <= 3 * se


# ---------------------------------------------------------------------------
# C and D


def _mp_smoothed(f_of_u, P):
    """int_0^1 f(u) du with u = v^k, k = 1/(p - sp), which flattens the (1 - t)^(p-1-sp) end."""
    k = 1 / (P.p - P.sp)
    return float(mp.quad(lambda v: f_of_u(v ** k) * k * v ** (k - 1), [0, 0.5, 1]))


def _mp_C_1d(P):
    sp, a, b, g, p = P.sp, P.alpha, P.beta, P.gamma_full, P.p

    def f(u):  # r = 1 - u
        lr = mp.log1p(-u)
        r = 1 - u
        return mp.exp((sp - 1) * lr) * (mp.exp(a * lr) + mp.exp(b * lr)) * abs(mp.expm1(g * lr)) ** p * (
            u ** (-1 - sp) + (1 + r) ** (-1 - sp))

    return _mp_smoothed(f, P)


def _mp_D_1d(P):
    sp, a, b, g, p = P.sp, P.alpha, P.beta, P.gamma_half, P.p

    def f(u):  # t = 1 - u
        lt = mp.log1p(-u)
        return (mp.exp(a * lt) + mp.exp(b * lt)) * abs(mp.expm1(-g * lt)) ** p * u ** (-1 - sp)

    return _mp_smoothed(f, P)


@pytest.mark.parametrize("s, p", [(0.6, 1.5), (0.8, 1.8), (0.95, 1.2)])
@pytest.mark.parametrize("a, b", WEIGHTS)
def test_constants_d1_against_mpmath(s, p, a, b):
    mp.mp.dps = 25
    P = _valid(1, s, p, a, b, "halfspace")
    if P is not None:
        assert constant_D(P).value == pytest.approx(_mp_D_1d(P), rel=1e-9)
    P = _valid(1, s, p, a, b, "fullspace")
    if P is not None:
        assert constant_C(P).value == pytest.approx(_mp_C_1d(P), rel=1e-9)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("s, p", GRID_SP)
def test_constants_positive(d, s, p):
    for a, b in WEIGHTS:
        for regime, fn in (("fullspace", constant_C), ("halfspace", constant_D)):
            P = _valid(d, s, p, a, b, regime)
            if P is None:
                continue
            K = fn(P)
            assert K.quadrature.converged
            assert K.error <= 1e-9 * K.value + 1e-13
            if regime == "halfspace" and abs(P.gamma_half) < 1e-12:
                assert K.value == 0.0
            else:
                assert K.value > 0


def test_constant_D_vanishes_for_constant_ground_state():
    # alpha + beta = sp - 1 makes the ground state constant
    P = FractionalParams(1, 0.6, 1.5, 0.1, -0.2)
    assert abs(P.gamma_half) < 1e-15
    assert constant_D(P).value == 0.0
    near = FractionalParams(1, 0.6, 1.5, 0.1, -0.2 + 1e-6)
    assert 0 < constant_D(near).value < 1e-6
    assert potential_pv(1.0, P, "halfspace") == pytest.approx(0.0, abs=1e-12)


def test_d_prefactor():
    assert d_prefactor(1, 0.7) == 1.0
    assert d_prefactor(3, 1.0) == pytest.approx(math.pi * math.gamma(1.0) / math.gamma(2.0))
    assert constant_D_unweighted(2, 0.6, 1.8).value == constant_D(FractionalParams(2, 0.6, 1.8)).value


@pytest.mark.parametrize("d, s, p", [(1, 0.8, 1.5), (2, 0.6, 1.8), (3, 0.3, 1.2)])
def test_c_integrand_endpoint_order(d, s, p):
    # near r = 1 the integrand behaves like c (1 - r)^(p - 1 - sp)
    P = FractionalParams(d, s, p)
    f = _c_integrand(P, QuadratureSpec(rel_tol=1e-12, abs_tol=1e-300))
    ratios = []
    for rb in (1e-2, 1e-3, 1e-4):
        r = np.array([1 - rb])
        ratios.append(float(f(r, r, np.array([rb]))[0]) / rb ** (p - 1 - P.sp))
    assert abs(ratios[2] / ratios[1] - 1) < abs(ratios[1] / ratios[0] - 1)
    assert abs(ratios[2] / ratios[1] - 1) < 0.05


def test_constant_C_at_p2_against_pv():
    P = FractionalParams(1, 0.45, 2.0)
    assert constant_C(P).value == pytest.approx(potential_pv(1.0, P, "fullspace"), rel=1e-4)


def test_constant_D_against_pv():
    P = FractionalParams(1, 0.8, 1.5)
    assert constant_D(P).value == pytest.approx(potential_pv(1.0, P, "halfspace"), rel=1e-3)


@pytest.mark.parametrize("s, p", GRID_SP)
def test_methods_agree(s, p):
    ad = QuadratureSpec(method=Method.ADAPTIVE_SUBDIVISION, rel_tol=1e-11)
    de = QuadratureSpec(rel_tol=1e-11)
    for a, b in WEIGHTS:
        for regime, fn in (("fullspace", constant_C), ("halfspace", constant_D)):
            P = _valid(1, s, p, a, b, regime)
            if P is None:
                continue
            x, y = fn(P, de), fn(P, ad)
            assert x.value == pytest.approx(y.value, rel=1e-8, abs=1e-300)


def test_constants_reject_invalid_regimes():
    with pytest.raises(RegimeError):
        constant_D(FractionalParams(1, 0.5, 1.6, 0.1, 0.1))
    with pytest.raises(RegimeError):
        constant_C(FractionalParams(1, 0.5, 1.6, 0.1, 0.1))


# ---------------------------------------------------------------------------
# c_p and C_p


def test_cp_examples():
    assert constant_cp(2.0) == pytest.approx(1.0, abs=1e-12)
    for p in (1.2, 1.5, 1.8, 2.5, 3.0):
        assert constant_cp(p) <= cp_objective(0.25, p) + 1e-15


def test_Cp_examples():
    r2 = math.sqrt(2)
    assert (r2 - 1) / r2 == pytest.approx(r2 * (r2 - 1) / 2, abs=1e-12)
    assert constant_Cp(r2) == pytest.approx(1 - 1 / r2, abs=1e-12)
    assert constant_Cp(1.2) == pytest.approx(1 / 6, rel=1e-15)
    assert constant_Cp(1.999) == pytest.approx(1.0, abs=2e-3)
    assert constant_Cp(1.3) == pytest.approx(0.3 / 1.3)
    assert constant_Cp(1.7) == pytest.approx(1.7 * 0.7 / 2)


@given(st.floats(1.001, 1.999))
def test_Cp_below_p_minus_1(p):
    # the general constant never exceeds the one for nonnegative functions
    assert 0 < constant_Cp(p) <= p - 1


# ---------------------------------------------------------------------------
# A


def test_A_examples():
    assert constant_A(1.5, 0.0, 0.0) == 2.0
    assert constant_A(1.8, 0.2, 0.8 * 0.2) == 1.0
    assert constant_A(1.8, 0.2, 0.2) == 0.0
    # log-grid brute force approaches the same limits
    # the ratio is 1 + tau^(-0.072) here, so the limit needs a very wide range
    assert constant_A_search(1.8, 0.2, 0.16, hi=1e300) == pytest.approx(1.0, abs=1e-6)
    assert constant_A_search(1.8, 0.2, 0.16) > constant_A_search(1.8, 0.2, 0.16, hi=1e300)
    assert constant_A_search(1.5, 0.3, 0.3, hi=1e300) < 1e-6


def test_A_argmin_is_minimizer():
    p, a, b = 1.5, 0.4, -0.1
    tau = constant_A_argmin(p, a, b)
    assert float(a_ratio(tau, p, a, b)) == pytest.approx(constant_A(p, a, b), rel=1e-13)
    assert constant_A_argmin(1.5, 0.3, 0.3) is None


interior = st.tuples(st.floats(1.05, 1.95), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))


@settings(max_examples=100, deadline=None)
@given(interior)
def test_A_closed_form_matches_search(t):
    p, a, b = t
    ea, eb = (p - 1) * a - b, (p - 1) * b - a
    assume(ea * eb < 0 and min(abs(ea), abs(eb)) > 1e-2)
    tau = constant_A_argmin(p, a, b)
    assume(1e-7 < tau < 1e7)
    assert constant_A_search(p, a, b) == pytest.approx(constant_A(p, a, b), abs=1e-8)


@settings(max_examples=200)
@given(interior)
def test_A_at_least_one_when_condition_holds(t):
    p, a, b = t
    ea, eb = (p - 1) * a - b, (p - 1) * b - a
    assume(ea * eb <= 0)
    assert constant_A(p, a, b) >= 1.0 - 1e-12


def test_A_rejects_p_outside():
    with pytest.raises(ValueError):
        constant_A(2.0, 0.1, 0.1)
