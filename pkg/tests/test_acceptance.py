"""Acceptance criteria 1-13, one test each, each printing a PASS/FAIL line with its runtime."""
import math
import time

import numpy as np
import pytest

from frachardy.cli import parse_config, payload, run
from frachardy.constants import (
    constant_A,
    constant_A_search,
    constant_C,
    constant_Cp,
    constant_cp,
    constant_D,
)
from frachardy.functionals import (
    bump,
    potential_pv,
    predicted_potential,
    verify_hardy,
    verify_hsm_halfspace,
    verify_interval,
)
from frachardy.geometry import Ball, HalfSpace, halfspace_m_rho_ratio, m_rho, m_rho_prefactor
from frachardy.model import FractionalParams, RegimeError, validate
from frachardy.pointwise import ScanGrid, Variant, appendix_k, layercake_check, optimality_probe, scan_prop
from frachardy.quadrature import Method, QuadratureSpec, surface_area

GRID_SP = [(s, p) for s in (0.6, 0.8, 0.95) for p in (1.2, 1.5, 1.8)]
WEIGHTS = [(0.0, 0.0), (0.1, -0.2), (0.3, 0.3)]


def _admissible(d, regime):
    out = []
    for s, p in GRID_SP:
        for a, b in WEIGHTS:
            P = FractionalParams(d, s, p, a, b)
            try:
                validate(P, regime)
            except RegimeError:
                continue
            out.append(P)
    return out


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _finish(acceptance_line, number, ok, limit, clock, detail):
    within = clock.seconds < limit
    acceptance_line(number, ok and within, f"{detail}; {clock.seconds:.2f} s (limit {limit:g} s)")
    assert ok, detail
    assert within, f"runtime {clock.seconds:.1f} s over {limit} s"


def test_criterion_01_constant_identities(acceptance_line):
    with Clock() as c:
        cp2 = constant_cp(2.0)
        r2 = math.sqrt(2.0)
        left, right = (r2 - 1) / r2, r2 * (r2 - 1) / 2
        at = constant_Cp(r2)
    ok = abs(cp2 - 1) <= 1e-12 and abs(left - right) <= 1e-12 and abs(at - left) <= 1e-12
    _finish(acceptance_line, 1, ok, 1, c, f"c_p(2) = {cp2!r}, C_p branches at sqrt 2: {left!r} vs {right!r}")


def test_criterion_02_k_values(acceptance_line):
    with Clock() as c:
        k_r2, k_2 = appendix_k(math.sqrt(2.0)), appendix_k(2.0)
    ok = 0.115 <= k_r2 <= 0.119 and abs(k_2) <= 1e-12
    _finish(acceptance_line, 2, ok, 1, c, f"k(sqrt 2) = {k_r2:.6f}, k(2) = {k_2:.1e}")


def test_criterion_03_pointwise_scan(acceptance_line):
    with Clock() as c:
        full = scan_prop(ScanGrid(), Variant.ALL_REAL_CP)
        nonneg = scan_prop(ScanGrid(a_range=(0.0, 50.0)), Variant.NONNEG_PMINUS1)
    ok = full.samples >= 1_000_000 and full.violations == 0 and nonneg.violations == 0
    _finish(acceptance_line, 3, ok, 120, c,
            f"C_p: {full.samples} points, {full.violations} violations, worst scaled slack {full.worst_slack:.2e}; "
            f"p-1 on a >= 0: {nonneg.samples} points, {nonneg.violations} violations")


def test_criterion_04_optimality_of_p_minus_1(acceptance_line):
    with Clock() as c:
        grid = ScanGrid(a_range=(0.0, 50.0), a_count=101, t_count=21, a_log_count=200, t_log_min=1e-8,
                        t_log_count=40, p_list=(1.1, 1.3, 1.5, 1.7, 1.9))
        rep = scan_prop(grid, Variant.NONNEG_PMINUS1, constant_factor=1.05, refine=0)
        probe = optimality_probe(grid.p_list, 1.05, 1e6, 1e-6)
    ok = all(v["violations"] > 0 for v in rep.per_p.values()) and all(v < 0 for v in probe.values())
    worst = ", ".join(f"p={p}: {v:.2e}" for p, v in probe.items())
    _finish(acceptance_line, 4, ok, 10, c, f"scaled slack at (1e6, 1e-6) with 1.05 (p-1): {worst}")


def test_criterion_05_ground_state_identity(acceptance_line):
    gaps, zeros = [], []
    with Clock() as c:
        for regime in ("fullspace", "halfspace"):
            for P in _admissible(1, regime):
                pv = potential_pv(1.0, P, regime)
                pred = predicted_potential(1.0, P, regime)
                if pred == 0.0:
                    # alpha + beta = sp - 1 on the half-line: constant ground state, zero potential
                    zeros.append(abs(pv))
                else:
                    gaps.append(abs(pv - pred) / abs(pred))
    ok = max(gaps) <= 1e-3 and all(z <= 1e-12 for z in zeros)
    _finish(acceptance_line, 5, ok, 300, c,
            f"{len(gaps)} instances, worst relative gap {max(gaps):.1e}; "
            f"{len(zeros)} with zero prediction, |pv| <= {max(zeros, default=0.0):.1e}")


def test_criterion_06_quadrature_cross_agreement(acceptance_line):
    de = QuadratureSpec(rel_tol=1e-11)
    ad = QuadratureSpec(method=Method.ADAPTIVE_SUBDIVISION, rel_tol=1e-11)
    gaps = []
    with Clock() as c:
        for regime, fn in (("fullspace", constant_C), ("halfspace", constant_D)):
            for P in _admissible(1, regime):
                x, y = fn(P, de).value, fn(P, ad).value
                # D is exactly 0 for a constant ground state; both routes return that 0
                gaps.append(0.0 if x == y == 0.0 else abs(x - y) / abs(x))
    ok = max(gaps) <= 1e-8
    _finish(acceptance_line, 6, ok, 120, c, f"{len(gaps)} constants, worst relative gap {max(gaps):.1e}")


def _c7_functions():
    return [
        ("d=1 even bump on (0.5, 1.5)", bump("slab:0.5,1.5")),
        ("d=1 even bump on (0.1, 3), amplitude 2.5", bump("slab:0.1,3.0", 2.5)),
        ("d=1 odd bump on (0.5, 1.5)", bump("slab:0.5,1.5", 1.0, "odd")),
        ("d=1 odd bump on (0.2, 0.6), amplitude -1", bump("slab:0.2,0.6", -1.0, "odd")),
        ("d=2 even bump on the disk at (0, 1.5) radius 0.5", bump("ball:0,1.5,0.5")),
    ]


def test_criterion_07_hardy_with_remainder(acceptance_line):
    summary, failures, runs = [], [], 0
    with Clock() as c:
        for name, u in _c7_functions():
            worst = math.inf
            for P in _admissible(u.dim, "halfspace"):
                rep = verify_hardy(u, P, "halfspace")
                runs += 1
                expected_c = P.p - 1 if u.nonnegative else constant_Cp(P.p)
                if rep.status != "pass" or rep.remainder_constant != expected_c:
                    failures.append((name, P, rep.status, rep.slack, rep.tol_total))
                worst = min(worst, rep.slack)
            summary.append(f"{name}: min slack {worst:.3g}")
    ok = not failures
    detail = f"{runs} runs, {len(failures)} failures; " + "; ".join(summary)
    _finish(acceptance_line, 7, ok, 900, c, detail)


def test_criterion_08_layer_cake(acceptance_line):
    rng = np.random.default_rng(8)
    worst = 0.0
    with Clock() as c:
        for _ in range(1000):
            x, y = np.exp(rng.uniform(-5, 5, 2))
            sp = rng.uniform(1.001, 1.999)
            lhs, rhs = layercake_check(float(x), float(y), float(sp))
            worst = max(worst, abs(rhs.value - lhs) / lhs)
    _finish(acceptance_line, 8, worst <= 1e-8, 5, c, f"1000 triples, worst relative gap {worst:.1e}")


def test_criterion_09_hsm_halfspace(acceptance_line):
    u = bump("ball:0,1.5,0.5")
    lines, ok = [], True
    with Clock() as c:
        for a, b in ((0.0, 0.0), (0.2, 0.8 * 0.2)):
            P = FractionalParams(2, 0.6, 1.8, a, b)
            rep = verify_hsm_halfspace(u, P)
            delta, R, tol = rep.extras["delta"], rep.remainder.value, rep.tol_total
            good = rep.status == "pass" and delta >= constant_Cp(1.8) * R - tol and R >= -tol
            if (a, b) != (0.0, 0.0):
                good = good and rep.extras["A"] >= 1.0
            ok = ok and good
            lines.append(f"(a,b)=({a},{b:.2f}): delta={delta:.4g} C_p R={constant_Cp(1.8) * R:.4g} "
                         f"A={rep.extras['A']:.3g} {rep.status}")
        fail = verify_hsm_halfspace(u, FractionalParams(2, 0.6, 1.8, 0.2, 0.2))
        ok = ok and fail.status == "condition-failure"
        lines.append(f"(0.2,0.2): {fail.status}")
    _finish(acceptance_line, 9, ok, 1200, c, "; ".join(lines))


def test_criterion_10_interval(acceptance_line):
    u = bump("slab:-0.8,0.8")
    lines, ok = [], True
    with Clock() as c:
        for p in (1.5, 1.8):
            rep = verify_interval(u, FractionalParams(1, 0.8, p), "(-1,1)")
            ok = ok and rep.status == "pass"
            lines.append(f"p={p}: slack {rep.slack:.4g} (tol {rep.tol_total:.1e}) {rep.status}")
    _finish(acceptance_line, 10, ok, 300, c, "; ".join(lines))


def test_criterion_11_A_closed_form(acceptance_line):
    rng = np.random.default_rng(11)
    worst, ge1 = 0.0, []
    with Clock() as c:
        for _ in range(100):
            p = rng.uniform(1.01, 1.99)
            a, b = rng.uniform(-0.9, 0.9, 2)
            # the ratio is convex in log tau; a wide log range reaches slowly decaying limits
            brute = constant_A_search(p, a, b, log_bounds=(-1e5, 1e5))
            worst = max(worst, abs(brute - constant_A(p, a, b)))
        exact_two = all(constant_A(p, 0.0, 0.0) == 2.0 for p in np.linspace(1.01, 1.99, 20))
        while len(ge1) < 50:
            p = rng.uniform(1.01, 1.99)
            a, b = rng.uniform(-0.9, 0.9, 2)
            if ((p - 1) * a - b) * ((p - 1) * b - a) <= 0:
                ge1.append(constant_A(p, a, b))
    ok = worst <= 1e-8 and exact_two and min(ge1) >= 1.0
    _finish(acceptance_line, 11, ok, 10, c,
            f"100 random triples, worst gap {worst:.1e}; A(p,0,0)=2: {exact_two}; min A over 50 pairs {min(ge1):.6f}")


def test_criterion_12_geometry(acceptance_line):
    lines, ok = [], True
    with Clock() as c:
        for d, rho in ((2, 1.08), (3, 1.08)):
            H = HalfSpace(d)
            xs = np.linspace(0.2, 5.0, 10)
            ratios = np.array([m_rho(np.r_[np.zeros(d - 1), xd], rho, H) / xd for xd in xs])
            spread = float(np.ptp(ratios) / ratios.mean())
            ok = ok and spread <= 1e-6
            lines.append(f"d={d}: m/x_d = {ratios.mean():.10f} (spread {spread:.1e}; printed normalization "
                         f"gives pi^(1/(2 rho)) = {halfspace_m_rho_ratio(d, rho):.10f}, so m > x_d)")
            B = Ball(tuple(np.zeros(d)), 1.0)
            closed = (m_rho_prefactor(d, rho) / surface_area(d)) ** (1 / rho)
            got = m_rho(np.zeros(d), rho, B)
            ok = ok and abs(got - closed) <= 1e-9 * closed
            lines.append(f"ball center {got:.12f} vs {closed:.12f}")
    _finish(acceptance_line, 12, ok, 60, c, "; ".join(lines))


C13_RUNS = [
    ["constants", "--d", "1,2", "--s", "0.6,0.95", "--p", "1.2,1.8", "--alpha", "0,0.1", "--beta", "0,-0.2"],
    ["verify-hardy", "--d", "1", "--s", "0.8", "--p", "1.5", "--regime", "halfspace"],
    ["verify-hardy", "--d", "3", "--s", "0.5", "--p", "1.5", "--regime", "halfspace", "--mc-budget", "20000"],
    ["pointwise-scan", "--p", "1.1,1.5,1.9", "--samples", "200000"],
    ["apb", "--p", "1.5,1.8", "--alpha", "0.2,0.4", "--beta=-0.1,0.16"],
    ["mrho", "--d", "2", "--s", "0.6", "--p", "1.8", "--domain", "box:0,0,4,4", "--x", "1,1;2,3"],
]


def test_criterion_13_reproducibility(acceptance_line, tmp_path):
    same = []
    with Clock() as c:
        for k, argv in enumerate(C13_RUNS):
            a = run(parse_config(argv + ["--seed", "13", "--out", str(tmp_path / f"a{k}.json")]))[1]
            b = run(parse_config(argv + ["--seed", "13", "--out", str(tmp_path / f"b{k}.json")]))[1]
            same.append(payload(a) == payload(b))
    ok = all(same)
    _finish(acceptance_line, 13, ok, 300, c, f"{sum(same)}/{len(same)} runs byte-identical without timestamps")
