"""The sharp constants C (punctured space) and D (half-space), Phi, c_p, C_p and A."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import FractionalParams, Regime, validate
from .quadrature import (
    IntegralResult,
    Location,
    QuadratureSpec,
    SingularityDescriptor,
    integrate_1d,
    minimize_scalar,
)


class ConstantKind(str, enum.Enum):
    C_FULLSPACE = "C_fullspace"
    D_HALFSPACE = "D_halfspace"


class QuadratureFailure(RuntimeError):
    """A defining integral did not converge."""


@dataclass(frozen=True)
class SharpConstant:
    value: float
    params: FractionalParams
    kind: ConstantKind
    quadrature: IntegralResult

    @property
    def error(self) -> float:
        return self.quadrature.error_estimate

    def __float__(self):
        return self.value


def sphere_area(d: int) -> float:
    """|S^{d-1}|; S^0 has two points."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _log_unit(x, xa, xb):
    """log x for x in (0, 1), accurate near both ends."""
    with np.errstate(divide="ignore"):
        return np.where(x < 0.5, np.log(xa), np.log1p(-xb))


# ---------------------------------------------------------------------------
# Phi


def log_abs_expm1(z):
    """log|exp(z) - 1| without overflow for large z."""
    z = np.asarray(z, dtype=float)
    big = z + np.log1p(-np.exp(-np.maximum(z, 30.0)))
    with np.errstate(divide="ignore"):
        small = np.log(np.abs(np.expm1(np.minimum(z, 30.0))))
    return np.where(z > 30.0, big, small)


def _log_phi(params: FractionalParams, r, rb, spec: QuadratureSpec):
    """log Phi at radii r with 1 - r given as rb; also returns a summary IntegralResult.

    For d >= 2 the inner integral is carried in logarithms: as r -> 1 it
    grows like (1 - r)^{-1-sp} and the raw integrand overflows.
    """
    d, sp = params.d, params.sp
    r = np.asarray(r, dtype=float)
    rb = np.asarray(rb, dtype=float)
    with np.errstate(divide="ignore"):
        lrb = np.log(rb)
    if d == 1:
        with np.errstate(over="ignore"):
            ratio = np.exp((1.0 + sp) * (lrb - np.log1p(r)))
        return -(1.0 + sp) * lrb + np.log1p(ratio), IntegralResult.exact(0.0)
    lam = 0.5 * (d + sp)
    expo = 0.5 * (d - 3)
    area = sphere_area(d - 1)
    order = SingularityDescriptor(Location.LEFT, max(expo, -0.5)), SingularityDescriptor(Location.RIGHT, max(expo, -0.5))
    # limit of (1 - r)^{1+sp} Phi(r) as r -> 1; the relative correction is O((1 - r)^{min(2, 1+sp)})
    limit = area * 0.5 * math.exp(
        math.lgamma((d - 1) / 2.0) + math.lgamma((1.0 + sp) / 2.0) - math.lgamma((d + sp) / 2.0)
    )
    out = np.empty(r.shape)
    max_err, ok, evals = 0.0, True, 0
    for i, (ri, lrbi) in enumerate(zip(r.flat, lrb.flat)):
        if lrbi < -35.0:
            out.flat[i] = math.log(limit) - (1.0 + sp) * lrbi
            continue
        # 1 - 2 t r + r^2 = (1 - r)^2 + 2 r (1 - t), with 1 - t the right offset;
        # the integrand is scaled by (1 - r)^{1+sp}
        def f(t, ta, tb, ri=ri, lrbi=lrbi):
            ltb = np.log(tb)
            lsum = np.logaddexp(2.0 * lrbi, math.log(2.0 * ri) + ltb) if ri > 0 else np.zeros_like(tb)
            return np.exp((1.0 + sp) * lrbi - lam * lsum + expo * (np.log(ta) + ltb))

        res = integrate_1d(f, -1.0, 1.0, order, spec, offsets=True)
        out.flat[i] = math.log(area * res.value) - (1.0 + sp) * lrbi
        max_err = max(max_err, res.error_estimate / res.value)
        ok = ok and res.converged
        evals += res.evaluations
    # error_estimate here is the worst relative error of the inner integrals
    return out, IntegralResult(float("nan"), max_err, evals, ok, spec.method.value)


def phi(params: FractionalParams, r: float, spec: QuadratureSpec | None = None) -> float:
    """Phi_{d,s,p}(r) for 0 <= r < 1."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"phi needs 0 <= r < 1, got {r}")
    spec = spec or QuadratureSpec()
    vals, res = _log_phi(params, np.array([r]), np.array([1.0 - r]), spec)
    if not res.converged:
        raise QuadratureFailure(f"Phi({r}) did not converge")
    return math.exp(float(vals[0]))


def phi_sphere_integrand(params: FractionalParams, r: float):
    """omega -> |e_1 - r omega|^{-(d+sp)}; integrating it over S^{d-1} gives Phi(r)."""
    e1 = np.zeros(params.d)
    e1[0] = 1.0
    lam = params.d + params.sp
    return lambda omega: np.linalg.norm(e1 - r * omega, axis=-1) ** (-lam)


# ---------------------------------------------------------------------------
# C and D


def _c_integrand(params: FractionalParams, spec: QuadratureSpec):
    sp, a, b, g, p = params.sp, params.alpha, params.beta, params.gamma_full, params.p

    def f(r, ra, rb):
        lr = _log_unit(r, ra, rb)
        lphi, res = _log_phi(params, r, rb, spec)
        if not res.converged:
            raise QuadratureFailure("Phi did not converge inside the C integral")
        rest = p * log_abs_expm1(g * lr) + lphi
        return np.exp((sp - 1.0 + a) * lr + rest) + np.exp((sp - 1.0 + b) * lr + rest)

    return f


def c_singularities(params: FractionalParams):
    sp, p = params.sp, params.p
    at0 = sp - 1.0 + min(params.alpha, params.beta) + min(params.gamma_full * p, 0.0)
    return (SingularityDescriptor(Location.LEFT, at0), SingularityDescriptor(Location.RIGHT, p - 1.0 - sp))


def d_singularities(params: FractionalParams):
    sp, p = params.sp, params.p
    at0 = min(params.alpha, params.beta) - max(params.gamma_half * p, 0.0)
    return (SingularityDescriptor(Location.LEFT, at0), SingularityDescriptor(Location.RIGHT, p - 1.0 - sp))


@lru_cache(maxsize=512)
def constant_C(params: FractionalParams, spec: QuadratureSpec | None = None) -> SharpConstant:
    """Sharp constant of the weighted Hardy inequality on R^d minus the origin."""
    spec = spec or QuadratureSpec()
    validate(params, Regime.FULL_SPACE, allow_boundary=True)
    # Phi (d >= 2) always uses tanh-sinh; its independent check is the hypergeometric form
    inner = QuadratureSpec(rel_tol=min(spec.rel_tol, 1e-12), abs_tol=1e-300, max_levels=12)
    res = integrate_1d(_c_integrand(params, inner), 0.0, 1.0, c_singularities(params), spec, offsets=True)
    if not res.converged:
        raise QuadratureFailure(f"C integral did not converge for {params}: {res}")
    return SharpConstant(res.value, params, ConstantKind.C_FULLSPACE, res)


def d_prefactor(d: int, sp: float) -> float:
    """pi^{(d-1)/2} Gamma((1+sp)/2) / Gamma((d+sp)/2); equal to 1 for d = 1."""
    if d == 1:
        return 1.0
    return math.pi ** ((d - 1) / 2.0) * math.gamma((1.0 + sp) / 2.0) / math.gamma((d + sp) / 2.0)


@lru_cache(maxsize=512)
def constant_D(params: FractionalParams, spec: QuadratureSpec | None = None) -> SharpConstant:
    """Sharp constant of the weighted Hardy inequality on the half-space."""
    spec = spec or QuadratureSpec()
    validate(params, Regime.HALF_SPACE, allow_boundary=True)
    sp, a, b, g, p = params.sp, params.alpha, params.beta, params.gamma_half, params.p
    if abs(g) <= 1e-12:
        # alpha + beta = sp - 1: the ground state x_d^(-g) is constant and D vanishes exactly
        return SharpConstant(0.0, params, ConstantKind.D_HALFSPACE, IntegralResult.exact(0.0))

    def f(t, ta, tb):
        lt = _log_unit(t, ta, tb)
        rest = p * log_abs_expm1(-g * lt) - (1.0 + sp) * np.log(tb)
        return np.exp(a * lt + rest) + np.exp(b * lt + rest)

    res = integrate_1d(f, 0.0, 1.0, d_singularities(params), spec, offsets=True)
    if not res.converged:
        raise QuadratureFailure(f"D integral did not converge for {params}: {res}")
    res = res.scaled(d_prefactor(params.d, sp))
    return SharpConstant(res.value, params, ConstantKind.D_HALFSPACE, res)


def constant_D_unweighted(d: int, s: float, p: float, spec: QuadratureSpec | None = None) -> SharpConstant:
    """D_{d,s,p} = D(d, s, p, 0, 0)."""
    return constant_D(FractionalParams(d, s, p, 0.0, 0.0), spec)


# ---------------------------------------------------------------------------
# scalar constants


def cp_objective(tau: float, p: float) -> float:
    return (1.0 - tau) ** p - tau ** p + p * tau ** (p - 1.0)


def constant_cp(p: float) -> float:
    """min over 0 < tau < 1/2 of (1-tau)^p - tau^p + p tau^{p-1}."""
    if not p > 1.0:
        raise ValueError("c_p needs p > 1")
    return minimize_scalar(lambda t: cp_objective(t, p), 0.0, 0.5, tol=1e-14)[1]


def constant_Cp(p: float) -> float:
    """max{(p-1)/p, p(p-1)/2}: (p-1)/p below sqrt 2, p(p-1)/2 from sqrt 2 on."""
    return max((p - 1.0) / p, p * (p - 1.0) / 2.0)


def _is_zero(v: float, scale: float) -> bool:
    return abs(v) <= 1e-12 * max(scale, 1.0)


def a_ratio(tau, p: float, alpha: float, beta: float):
    """(tau^{p alpha} + tau^{p beta}) / tau^{alpha + beta}."""
    tau = np.asarray(tau, dtype=float)
    lt = np.log(tau)
    return np.exp(((p - 1) * alpha - beta) * lt) + np.exp(((p - 1) * beta - alpha) * lt)


def constant_A(p: float, alpha: float, beta: float) -> float:
    """inf over tau > 0 of (tau^{p alpha} + tau^{p beta}) / tau^{alpha+beta}, in closed form.

    With a = (p-1) alpha - beta and b = (p-1) beta - alpha the ratio is
    tau^a + tau^b: 2 when a = b = 0, 1 when exactly one vanishes, 0 when
    a b > 0, and (1 + x) x^{-x/(1+x)} with x = -a/b when a b < 0.
    """
    if not 1.0 < p < 2.0:
        raise ValueError("A needs 1 < p < 2")
    a = (p - 1.0) * alpha - beta
    b = (p - 1.0) * beta - alpha
    scale = abs(alpha) + abs(beta)
    za, zb = _is_zero(a, scale), _is_zero(b, scale)
    if za and zb:
        return 2.0
    if za or zb:
        return 1.0
    if a * b > 0:
        return 0.0
    if a > 0:
        a, b = b, a
    x = -a / b
    return (1.0 + x) * x ** (-x / (1.0 + x))


def constant_A_argmin(p: float, alpha: float, beta: float) -> float | None:
    """Interior minimizer tau* = (-a/b)^{1/(b-a)} when a b < 0, else None."""
    a = (p - 1.0) * alpha - beta
    b = (p - 1.0) * beta - alpha
    if a * b >= 0:
        return None
    if a > 0:
        a, b = b, a
    return (-a / b) ** (1.0 / (b - a))


def a_ratio_log(z, p: float, alpha: float, beta: float):
    """The A ratio at tau = exp(z), without forming tau (so |z| may exceed 709)."""
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(((p - 1) * alpha - beta) * z) + np.exp(((p - 1) * beta - alpha) * z)


def constant_A_search(p: float, alpha: float, beta: float, lo: float = 1e-8, hi: float = 1e8,
                      log_bounds: tuple | None = None) -> float:
    """Scan-and-refine minimum of the A ratio over tau in [lo, hi], searched in z = log tau.

    The ratio is convex in z, so the search is reliable on any range; ``log_bounds``
    gives the z-range directly, which reaches limits that decay like tau^(-0.001).
    """
    zlo, zhi = log_bounds if log_bounds is not None else (math.log(lo), math.log(hi))
    g = lambda z: float(a_ratio_log(z, p, alpha, beta))
    return minimize_scalar(g, zlo, zhi, tol=1e-14)[1]
