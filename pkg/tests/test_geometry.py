import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frachardy.functionals import OutsideSupportError, bump, verify_hsm_halfspace
from frachardy.geometry import (
    Ball,
    Box,
    ConvexPolytope,
    HalfSpace,
    Interval,
    OutsideDomainError,
    PuncturedSpace,
    dir_distance,
    dist_boundary,
    halfspace_m_rho_ratio,
    m_rho,
    m_rho_prefactor,
    parse_domain,
    sphere_inverse_power,
    verify_hsm_general,
)
from frachardy.model import FractionalParams, RegimeError
from frachardy.quadrature import surface_area

TRIANGLE = ConvexPolytope(((0.0, -1.0), (-1.0, 0.0), (1.0, 1.0)), (0.0, 0.0, 1.0))


def test_dist_examples():
    assert dist_boundary(np.array([0.3, 0.7]), HalfSpace(2)) == pytest.approx(0.7)
    assert dist_boundary(np.zeros(2), Ball((0.0, 0.0), 1.0)) == 1.0
    assert dist_boundary(np.array([0.3, 0.9]), Box([0, 0], [1, 1])) == pytest.approx(0.1)
    assert dist_boundary(np.array([0.25]), Interval(-1.0, 1.0)) == pytest.approx(0.75)
    assert dist_boundary(np.array([3.0, 4.0]), PuncturedSpace(2)) == pytest.approx(5.0)
    # the triangle x, y > 0, x + y < 1 has inradius 1 / (2 + sqrt 2)
    r = 1 / (2 + math.sqrt(2))
    assert dist_boundary(np.array([r, r]), TRIANGLE) == pytest.approx(r, rel=1e-12)
    # an exterior point of a polytope: distance to the nearest vertex
    assert dist_boundary(np.array([2.0, 2.0]), Box([0, 0], [1, 1])) == pytest.approx(math.sqrt(2))


def test_dir_distance_examples():
    H = HalfSpace(2)
    w = np.array([0.6, 0.8])
    assert dir_distance(np.array([5.0, 0.4]), w, H) == pytest.approx(0.5)
    assert dir_distance(np.array([5.0, 0.4]), np.array([1.0, 0.0]), H) == math.inf
    B = Ball((0.0, 0.0, 0.0), 1.0)
    for w in np.eye(3):
        assert dir_distance(np.zeros(3), w, B) == pytest.approx(1.0)
    assert dir_distance(np.array([0.5, 0.5]), np.array([1.0, 0.0]), Box([0, 0], [1, 3])) == pytest.approx(0.5)
    with pytest.raises(OutsideDomainError):
        dir_distance(np.array([0.0, -1.0]), w[:2], H)


DOMAINS = [HalfSpace(2), Ball((0.5, -0.2), 2.0), Box([0, 0], [4, 2]), TRIANGLE]


def _interior(dom, rng):
    if isinstance(dom, HalfSpace):
        return np.array([rng.uniform(-3, 3), rng.uniform(0.01, 3)])
    while True:
        x = rng.uniform(-3, 5, 2)
        if dom.contains(x) and dom.dist_boundary(x) > 1e-3:
            return x


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: type(d).__name__)
def test_dir_distance_symmetric_and_bounded_below_by_dist(dom):
    rng = np.random.default_rng(4)
    th = np.linspace(0, 2 * math.pi, 20001)
    W = np.stack([np.cos(th), np.sin(th)], axis=-1)
    for _ in range(10):
        x = _interior(dom, rng)
        dw = dir_distance(x, W, dom)
        assert np.array_equal(dw, dir_distance(x, -W, dom))
        dist = dist_boundary(x, dom)
        assert np.all(dw >= dist * (1 - 1e-12))
        # on convex domains the nearest boundary point is reached along some direction
        assert dw.min() == pytest.approx(dist, rel=1e-6)


def test_parse_domain():
    assert parse_domain("halfspace", 3) == HalfSpace(3)
    assert parse_domain("box:0,0,4,4") == Box([0, 0], [4, 4])
    assert parse_domain("ball:0,0,1") == Ball((0.0, 0.0), 1.0)
    assert parse_domain("interval:-1,1") == Interval(-1.0, 1.0)
    for dom in (HalfSpace(2), Box([0, 0], [1, 2]), Ball((1.0, 2.0), 3.0), TRIANGLE):
        assert parse_domain(dom.as_dict()) == dom
    with pytest.raises(ValueError):
        parse_domain("torus:1")


# ---------------------------------------------------------------------------
# m_rho


@pytest.mark.parametrize("d, rho", [(2, 1.08), (2, 0.5), (3, 1.08), (3, 1.5)])
def test_m_rho_halfspace_proportional_to_xd(d, rho):
    H = HalfSpace(d)
    xs = np.linspace(0.1, 5.0, 10)
    ratios = np.array([m_rho(np.r_[np.full(d - 1, 0.3), xd], rho, H) / xd for xd in xs])
    assert np.ptp(ratios) <= 1e-6 * ratios.mean()
    assert ratios.mean() == pytest.approx(halfspace_m_rho_ratio(d, rho), rel=1e-8)
    # with the printed prefactor the ratio is pi^(1/(2 rho)) > 1
    assert halfspace_m_rho_ratio(d, rho) == pytest.approx(math.pi ** (0.5 / rho), rel=1e-14)
    x1, x2 = np.r_[np.zeros(d - 1), 1.0], np.r_[np.zeros(d - 1), 2.0]
    assert m_rho(x2, rho, H) / m_rho(x1, rho, H) == pytest.approx(2.0, rel=1e-9)
    assert m_rho(x1, rho, H, normalization="calibrated") == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("d", [2, 3])
def test_m_rho_ball_center(d):
    rho = 1.2
    B = Ball(tuple(np.zeros(d)), 1.0)
    expected = (m_rho_prefactor(d, rho) / surface_area(d)) ** (1 / rho)
    assert m_rho(np.zeros(d), rho, B) == pytest.approx(expected, rel=1e-10)


def test_m_rho_box_against_direct_angle_sum():
    box = Box([0, 0], [4, 2])
    x = np.array([1.0, 0.5])
    th = (np.arange(400_000) + 0.5) * (2 * math.pi / 400_000)
    W = np.stack([np.cos(th), np.sin(th)], axis=-1)
    brute = np.mean(dir_distance(x, W, box) ** -1.1) * 2 * math.pi
    assert sphere_inverse_power(x, 1.1, box).value == pytest.approx(brute, rel=1e-7)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_m_rho_monotone_under_domain_inclusion(a, b):
    # a smaller domain has smaller exit distances, hence a smaller m
    x = np.array([a, b])
    small, big = Box([0, 0], [1, 1]), Box([-1, -1], [2, 2])
    assert m_rho(x, 1.1, small) <= m_rho(x, 1.1, big)


def test_m_rho_rejects():
    with pytest.raises(ValueError):
        m_rho(np.array([0.5]), 1.0, Interval(0.0, 1.0))
    with pytest.raises(OutsideDomainError):
        m_rho(np.array([0.0, -0.5]), 1.0, HalfSpace(2))
    with pytest.raises(ValueError):
        m_rho_prefactor(2, 1.0, "other")


# ---------------------------------------------------------------------------
# HSM on a general domain


def test_hsm_general_zero_function():
    P = FractionalParams(2, 0.6, 1.8)
    r = verify_hsm_general(bump("ball:2,2,1", 0.0), P, Box([0, 0], [4, 4]))
    assert r.passed and r.slack == 0.0


def test_hsm_general_box():
    P = FractionalParams(2, 0.6, 1.8)
    r = verify_hsm_general(bump("ball:2,2,1"), P, Box([0, 0], [4, 4]))
    assert r.status == "pass" and r.slack >= -r.tol_total
    assert r.extras["ratio_delta_sobolev"] > 0
    cmp = r.extras["convex_comparison"]
    assert cmp["informational"]
    # with the printed prefactor m exceeds dist, so the m-weighted term is the smaller one
    assert cmp["hardy_m"] < cmp["hardy_dist"]


def test_hsm_general_halfspace_matches_halfspace_pipeline():
    P = FractionalParams(2, 0.6, 1.8)
    u = bump("ball:0,1.5,0.5")
    g = verify_hsm_general(u, P, HalfSpace(2), normalization="calibrated")
    h = verify_hsm_halfspace(u, P)
    assert g.status == h.status == "pass"
    assert abs(g.extras["delta"] - h.extras["delta"]) <= g.tol_total + h.tol_total


def test_hsm_general_rejects():
    with pytest.raises(RegimeError):
        verify_hsm_general(bump("ball:2,2,1"), FractionalParams(2, 0.6, 1.8, 0.1, 0.0), Box([0, 0], [4, 4]))
    with pytest.raises(OutsideSupportError):
        verify_hsm_general(bump("ball:0.5,2,1"), FractionalParams(2, 0.6, 1.8), Box([0, 0], [4, 4]))
