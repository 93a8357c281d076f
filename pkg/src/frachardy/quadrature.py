"""Numerical integration and scalar minimization.

Integrands are numpy-vectorized.  Endpoint-singular integrands are best
written against the *offsets* from the endpoints rather than the abscissa
itself: with ``offsets=True`` the integrand is called as ``f(x, xa, xb)``
where ``xa = x - a`` and ``xb = b - x`` are computed without cancellation,
so orders close to -1 keep their mass near the endpoint.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

# offsets below this underflow in the tanh-sinh map; beyond it the nodes are dropped
DE_TMAX = 6.1
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Method(str, enum.Enum):
    DOUBLE_EXPONENTIAL = "de"
    ADAPTIVE_SUBDIVISION = "adaptive"
    MONTE_CARLO = "mc"


class Location(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    DIAGONAL = "diagonal"
    ORIGIN = "origin"


@dataclass(frozen=True)
class SingularityDescriptor:
    location: Location
    order: float

    def __post_init__(self):
        if not self.order > -1.0:
            raise ValueError(f"singularity order {self.order} is not integrable (must be > -1)")


@dataclass(frozen=True)
class QuadratureSpec:
    method: Method = Method.DOUBLE_EXPONENTIAL
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_levels: int = 10
    mc_budget: int = 200_000
    seed: int = 20240917
    mc_rel_tol: float = 2e-2

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.mc_budget <= 0:
            raise ValueError("mc_budget must be positive")
        object.__setattr__(self, "method", Method(self.method))

    def tol(self, value: float) -> float:
        rel = self.mc_rel_tol if self.method is Method.MONTE_CARLO else self.rel_tol
        return max(self.abs_tol, rel * abs(value))

    def with_method(self, method) -> "QuadratureSpec":
        return replace(self, method=Method(method))


@dataclass
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool
    method_used: str = Method.DOUBLE_EXPONENTIAL.value
    # set for Monte Carlo results: error_estimate is then one standard error
    statistical: bool = False

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
            self.method_used if self.method_used == other.method_used else "mixed",
            self.statistical or other.statistical,
        )

    def scaled(self, c: float) -> "IntegralResult":
        return replace(self, value=c * self.value, error_estimate=abs(c) * self.error_estimate)

    @classmethod
    def exact(cls, value: float = 0.0) -> "IntegralResult":
        return cls(float(value), 0.0, 0, True, "exact")

    def as_dict(self) -> dict:
        return {"value": self.value, "error": self.error_estimate, "converged": self.converged}


def total(results: Sequence[IntegralResult]) -> IntegralResult:
    """Sum of results in the given order, values added with fsum."""
    if not results:
        return IntegralResult.exact(0.0)
    out = results[0]
    for r in results[1:]:
        out = out + r
    out.value = math.fsum(r.value for r in results)
    return out


# ---------------------------------------------------------------------------
# tanh-sinh rule


@lru_cache(maxsize=64)
def de_rule(level: int, tmax: float = DE_TMAX):
    """Tanh-sinh rule on [0, 1] with step ``2**-level``.

    Returns ``(da, db, w, coarse)``: offsets from 0 and 1, weights, and a mask
    selecting the nodes of the rule one level down (whose weights are ``2*w``).
    """
    h = 2.0 ** (-level)
    n = int(math.floor(tmax / h))
    k = np.arange(-n, n + 1)
    t = k * h
    s = 0.5 * np.pi * np.sinh(t)
    with np.errstate(over="ignore"):
        da = 1.0 / (1.0 + np.exp(-2.0 * s))
        db = 1.0 / (1.0 + np.exp(2.0 * s))
    w = h * np.pi * np.cosh(t) * da * db
    # subnormal offsets carry few significant bits; the power tail covers what lies below
    keep = (da >= 1e-300) & (db >= 1e-300) & (w > 0.0)
    coarse = (k % 2 == 0)[keep]
    for arr in (da, db, w):
        arr.setflags(write=False)
    return da[keep], db[keep], w[keep], coarse


def de_nodes(a: float, b: float, level: int, tmax: float = DE_TMAX):
    """Scaled tanh-sinh nodes on [a, b]: ``(x, xa, xb, w, coarse)``."""
    da, db, w, coarse = de_rule(level, tmax)
    L = b - a
    xa, xb = L * da, L * db
    x = np.where(da <= 0.5, a + xa, b - xb)
    return x, xa, xb, L * w, coarse


def _call(f, x, xa, xb, offsets):
    v = f(x, xa, xb) if offsets else f(x)
    return np.broadcast_to(np.asarray(v, dtype=float), x.shape)


def _integrate_de(f, a, b, spec, offsets, tmax=DE_TMAX):
    prev = None
    evals = 0
    value = err = math.nan
    for level in range(0, spec.max_levels + 1):
        x, xa, xb, w, coarse = de_nodes(a, b, level, tmax)
        fx = _call(f, x, xa, xb, offsets)
        evals += x.size
        value = float(np.sum(w * fx))
        if not math.isfinite(value):
            return IntegralResult(value, math.inf, evals, False, Method.DOUBLE_EXPONENTIAL.value)
        if prev is not None:
            # successive levels can agree bit-exactly; keep the rounding level as a floor
            err = max(abs(value - prev), 4e-16 * float(np.sum(np.abs(w * fx))))
            if level >= 3 and err <= spec.tol(value):
                return IntegralResult(value, err, evals, True, Method.DOUBLE_EXPONENTIAL.value)
        prev = value
    return IntegralResult(value, err, evals, False, Method.DOUBLE_EXPONENTIAL.value)


# tanh-sinh stops about 1e-300 from an endpoint; for f ~ x^e the points below
# hold a fraction (1e-300)^(1+e) of the mass, visible once 1 + e < 0.1
GRADE_BELOW = 0.1
GRADE_CUT = 1e-200


def _endpoint_order(sing, locs):
    es = [d.order for d in sing if d.location in locs]
    return min(es) if es else None


def _log_graded(f, a, b, lo, hi, e, left, spec, offsets):
    """int over [lo, hi] of f, singular like r^e at the ``left`` (or right) end, r the distance to it.

    Above r_c = GRADE_CUT * span the integral runs in log r, where it is smooth; below
    r_c the power law gives f(r_c) r_c / (1 + e), checked against the local slope.
    """
    span = hi - lo
    L = b - a
    lspan = math.log(span)

    def at(r):
        x = lo + r if left else hi - r
        near = r
        far = -span * np.expm1(np.log(r) - lspan)
        if left:
            xa, xb = near, far + (b - hi)
        else:
            xa, xb = far + (lo - a), near
        return _call(f, x, xa, xb, offsets)

    def g(y, ya, yb):
        r = np.exp(y)
        return at(r) * r

    rc = GRADE_CUT * span
    body = _integrate_de(g, math.log(rc), lspan, spec, True)
    f1, f2 = (float(v) for v in at(np.array([rc, 2.0 * rc])))
    tail = f1 * rc / (1.0 + e)
    if f1 != 0.0 and f2 != 0.0 and f1 * f2 > 0.0:
        slope = math.log(f2 / f1) / math.log(2.0)
        tail_err = abs(tail) * abs(slope - e) / (1.0 + min(slope, e) if min(slope, e) > -1.0 else 1.0)
    else:
        tail_err = abs(tail)
    return IntegralResult(body.value + tail, body.error_estimate + tail_err, body.evaluations + 2,
                          body.converged and tail_err <= spec.tol(body.value + tail),
                          Method.DOUBLE_EXPONENTIAL.value)


def _integrate_de_graded(f, a, b, sing, spec, offsets):
    """tanh-sinh, switching to a log variable near an endpoint of order e close to -1."""
    el = _endpoint_order(sing, (Location.LEFT, Location.ORIGIN))
    er = _endpoint_order(sing, (Location.RIGHT,))
    gl = el is not None and 1.0 + el < GRADE_BELOW
    gr = er is not None and 1.0 + er < GRADE_BELOW
    if not (gl or gr):
        return _integrate_de(f, a, b, spec, offsets)
    # offsets stay measured from a and b of the full interval
    m = a + 0.5 * (b - a)
    parts = []
    if gl:
        parts.append(_log_graded(f, a, b, a, m, el, True, spec, offsets))
    else:
        parts.append(_integrate_de(lambda x, xa, xb: _call(f, x, xa, xb + (b - m), offsets), a, m, spec, True))
    if gr:
        parts.append(_log_graded(f, a, b, m, b, er, False, spec, offsets))
    else:
        parts.append(_integrate_de(lambda x, xa, xb: _call(f, x, xa + (m - a), xb, offsets), m, b, spec, True))
    return total(parts)


# ---------------------------------------------------------------------------
# geometrically graded Gauss-Legendre


@lru_cache(maxsize=8)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gl_panel(f, a, b, lo, hi, from_left, offsets):
    """Integrate over the offset range [lo, hi] measured from a (from_left) or from b."""
    out = []
    for n in (16, 24):
        g, gw = _gauss_legendre(n)
        u = 0.5 * (hi + lo) + 0.5 * (hi - lo) * g
        L = b - a
        if from_left:
            x, xa, xb = a + u, u, L - u
        else:
            x, xa, xb = b - u, L - u, u
        out.append(0.5 * (hi - lo) * float(np.sum(gw * _call(f, x, xa, xb, offsets))))
    return out[1], abs(out[1] - out[0]), 40


def _adaptive_panel(f, a, b, lo, hi, from_left, offsets, tol, depth=0):
    val, err, ev = _gl_panel(f, a, b, lo, hi, from_left, offsets)
    if err <= tol or depth >= 30 or hi - lo <= 1e-15 * max(hi, 1e-300):
        return val, err, ev
    mid = 0.5 * (lo + hi)
    v1, e1, n1 = _adaptive_panel(f, a, b, lo, mid, from_left, offsets, tol / 2, depth + 1)
    v2, e2, n2 = _adaptive_panel(f, a, b, mid, hi, from_left, offsets, tol / 2, depth + 1)
    return v1 + v2, e1 + e2, ev + n1 + n2


def _graded_half(f, a, b, from_left, offsets, tol, q=0.25):
    """Panels [u q, u] shrinking geometrically toward the endpoint, plus a geometric tail."""
    half = 0.5 * (b - a)
    u = half
    values, err, evals = [], 0.0, 0
    tail = 0.0
    while u > 1e-300:
        v, e, n = _adaptive_panel(f, a, b, u * q, u, from_left, offsets, tol / 50)
        values.append(v)
        err += e
        evals += n
        u *= q
        if len(values) >= 4:
            r1 = values[-1] / values[-2] if values[-2] else 0.0
            r2 = values[-2] / values[-3] if values[-3] else 0.0
            if 0.0 <= r1 < 1.0 and 0.0 <= r2 < 1.0 and abs(r1 - r2) <= 0.05 * max(r1, 1e-300):
                tail = values[-1] * r1 / (1.0 - r1)
                if abs(tail) <= tol / 10:
                    break
            elif values[-1] == 0.0 and values[-2] == 0.0:
                tail = 0.0
                break
    return math.fsum(values) + tail, err + abs(tail), evals


def _integrate_adaptive(f, a, b, sing, spec, offsets):
    left = any(s.location in (Location.LEFT, Location.ORIGIN) for s in sing)
    right = any(s.location is Location.RIGHT for s in sing)
    # one pass to learn the scale, a second at the final tolerance
    scale = None
    for _ in range(2):
        tol = spec.abs_tol if scale is None else max(spec.abs_tol, spec.rel_tol * abs(scale))
        parts, errs, evals = [], 0.0, 0
        half = 0.5 * (b - a)
        for from_left, graded in ((True, left), (False, right)):
            if graded:
                v, e, n = _graded_half(f, a, b, from_left, offsets, tol / 2)
            else:
                v, e, n = _adaptive_panel(f, a, b, 0.0, half, from_left, offsets, tol / 2)
            parts.append(v)
            errs += e
            evals += n
        value = math.fsum(parts)
        if scale is not None:
            break
        scale = value
    return IntegralResult(value, errs, evals, errs <= spec.tol(value), Method.ADAPTIVE_SUBDIVISION.value)


def _integrate_mc_1d(f, a, b, sing, spec, offsets):
    """Monte Carlo on the two halves of [a, b]; a half with a declared endpoint
    singularity of order q samples its offset with density ~ u**q."""
    rng = np.random.default_rng(spec.seed)
    L = b - a
    half = 0.5 * L
    per = max(spec.mc_budget // 2, 2)
    orders = {"left": 0.0, "right": 0.0}
    for s in sing:
        key = "right" if s.location is Location.RIGHT else "left"
        orders[key] = min(orders[key], s.order)
    means, var = [], 0.0
    for end in ("left", "right"):
        expo = 1.0 + orders[end]
        U = rng.random(per)
        u = half * U ** (1.0 / expo)
        dens = expo * (u / half) ** (expo - 1.0) / half
        if end == "left":
            x, xa, xb = a + u, u, L - u
        else:
            x, xa, xb = b - u, L - u, u
        vals = _call(f, x, xa, xb, offsets) / dens
        means.append(float(np.mean(vals)))
        var += float(np.var(vals, ddof=1)) / per
    value = math.fsum(means)
    se = math.sqrt(var)
    mc_spec = spec.with_method(Method.MONTE_CARLO)
    return IntegralResult(value, se, 2 * per, se <= mc_spec.tol(value), Method.MONTE_CARLO.value, True)


def integrate_1d(
    f: Callable,
    a: float,
    b: float,
    sing: Sequence[SingularityDescriptor] = (),
    spec: QuadratureSpec | None = None,
    offsets: bool = False,
) -> IntegralResult:
    """Integrate ``f`` over [a, b] with the method selected in ``spec``.

    Non-convergence is reported through ``converged=False``, never hidden.
    """
    spec = spec or QuadratureSpec()
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if spec.method is Method.DOUBLE_EXPONENTIAL:
        return _integrate_de_graded(f, a, b, tuple(sing), spec, offsets)
    if spec.method is Method.ADAPTIVE_SUBDIVISION:
        return _integrate_adaptive(f, a, b, tuple(sing), spec, offsets)
    return _integrate_mc_1d(f, a, b, tuple(sing), spec, offsets)


# ---------------------------------------------------------------------------
# sphere integrals


def surface_area(d: int) -> float:
    """|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def uniform_directions(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _sphere_2d(g, breaks, spec):
    cuts = sorted({0.0, 2 * math.pi, *[b % (2 * math.pi) for b in breaks]})
    parts = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo < 1e-15:
            continue
        fn = lambda th: g(np.stack([np.cos(th), np.sin(th)], axis=-1))
        parts.append(_integrate_de(fn, lo, hi, spec, False, tmax=4.0))
    return total(parts)


def _sphere_3d(g, polar_breaks, spec):
    cuts = sorted({0.0, math.pi, *[b for b in polar_breaks if 0 < b < math.pi]})
    prev = None
    evals = 0
    value = err = math.nan
    for level in range(1, min(spec.max_levels, 8) + 1):
        acc = []
        m = 2 ** (level + 3)
        az = 2 * math.pi * np.arange(m) / m
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            phi, _, _, w, _ = de_nodes(lo, hi, level, tmax=4.0)
            P, A = np.meshgrid(phi, az, indexing="ij")
            omega = np.stack([np.sin(P) * np.cos(A), np.sin(P) * np.sin(A), np.cos(P)], axis=-1)
            vals = g(omega) * np.sin(P)
            evals += vals.size
            acc.append(float(np.sum(w[:, None] * vals)) * 2 * math.pi / m)
        value = math.fsum(acc)
        if prev is not None:
            err = max(abs(value - prev), 4e-16 * abs(value))
            if level >= 3 and err <= spec.tol(value):
                return IntegralResult(value, err, evals, True, "product")
        prev = value
    return IntegralResult(value, err, evals, False, "product")


def _sphere_mc(g, d, spec):
    rng = np.random.default_rng(spec.seed)
    n = spec.mc_budget
    chunks = []
    for start in range(0, n, 65536):
        k = min(65536, n - start)
        chunks.append(np.asarray(g(uniform_directions(rng, k, d)), dtype=float))
    vals = np.concatenate(chunks)
    area = surface_area(d)
    value = area * float(np.mean(vals))
    se = area * float(np.std(vals, ddof=1)) / math.sqrt(n)
    mc_spec = spec.with_method(Method.MONTE_CARLO)
    return IntegralResult(value, se, n, se <= mc_spec.tol(value), Method.MONTE_CARLO.value, True)


def integrate_sphere(
    g: Callable, d: int, spec: QuadratureSpec | None = None, breaks: Sequence[float] = ()
) -> IntegralResult:
    """Surface integral of ``g`` over S^{d-1}; ``g`` maps (..., d) unit vectors to values.

    ``breaks`` are angles (d=2) or polar angles from +e_d (d=3) where ``g`` is
    not smooth; the rule places subinterval endpoints there.
    """
    spec = spec or QuadratureSpec()
    if d < 2:
        raise ValueError("sphere integrals need d >= 2")
    if spec.method is Method.MONTE_CARLO or d >= 4:
        return _sphere_mc(g, d, spec)
    if d == 2:
        return _sphere_2d(g, breaks, spec)
    return _sphere_3d(g, breaks, spec)


# ---------------------------------------------------------------------------
# double integrals with a diagonal singularity


def _double_interval(F, a, b, spec):
    """sum over x of [int_0^{b-x} F(x, h) dh + int_0^{x-a} F(x, -h) dh], tensor tanh-sinh."""
    prev = None
    evals = 0
    value = err = math.nan
    for level in range(2, min(spec.max_levels, 8) + 1):
        x, xa, xb, wx, _ = de_nodes(a, b, level)
        da, db, wh, _ = de_rule(level)
        acc = 0.0
        for sign, reach in ((1.0, xb), (-1.0, xa)):
            h = reach[:, None] * da[None, :]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                vals = F(x[:, None, None], sign * h[..., None])
                contrib = wx[:, None] * reach[:, None] * wh[None, :] * vals
            evals += vals.size
            # nodes that underflow onto the diagonal carry zero weight
            acc += float(np.sum(np.where(np.isfinite(contrib), contrib, 0.0)))
        value = acc
        if prev is not None:
            err = abs(value - prev)
            if level >= 4 and err <= spec.tol(value):
                return IntegralResult(value, err, evals, True, Method.DOUBLE_EXPONENTIAL.value)
        prev = value
    return IntegralResult(value, err, evals, False, Method.DOUBLE_EXPONENTIAL.value)


def polar_double(
    F: Callable,
    outer_x: np.ndarray,
    outer_w: np.ndarray,
    radial_breaks: Callable,
    angular_breaks: Callable,
    level: int,
    chunk: int = 64,
):
    """Double integral as an outer sum over points x and a polar inner integral about x.

    ``F(x, e, rho)`` evaluates the integrand (kernel included, Jacobian
    ``rho**(d-1)`` excluded) at y = x + rho e for arrays broadcasting to
    (n, m, k).  ``angular_breaks(x)`` gives per-point sorted angles in
    [0, 2 pi] (shape (n, K)), ``radial_breaks(x, e)`` per-direction sorted
    radii starting at 0 (shape (n, m, R)); ``inf`` is allowed as the last
    radius.  Returns the fine and coarse (one level down everywhere) sums.
    """
    da, db, w, coarse = de_rule(level, 4.0)
    rda, rdb, rw, rcoarse = de_rule(level)
    fine_total, coarse_total = [], []
    for start in range(0, outer_x.shape[0], chunk):
        X = outer_x[start:start + chunk]
        WX = outer_w[start:start + chunk]
        ang = angular_breaks(X)
        fine_x = np.zeros(X.shape[0])
        coarse_x = np.zeros(X.shape[0])
        for j in range(ang.shape[1] - 1):
            lo, hi = ang[:, j:j + 1], ang[:, j + 1:j + 2]
            span = hi - lo
            th = np.where(da <= 0.5, lo + span * da, hi - span * db)
            wth = span * w
            E = np.stack([np.cos(th), np.sin(th)], axis=-1)
            radii = radial_breaks(X, E)
            for r in range(radii.shape[-1] - 1):
                r0 = radii[..., r:r + 1]
                r1 = radii[..., r + 1:r + 2]
                infinite = np.isinf(r1)
                seg = np.where(infinite, 1.0, r1 - r0)
                seg = np.where(seg > 0, seg, 0.0)
                # finite segments: rho = r0 + seg*da ; infinite: rho = r0 / tau, tau in (0,1)
                rho_f = np.where(rda <= 0.5, r0 + seg * rda, r1 - seg * rdb) if not np.all(infinite) else None
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    rho_inf = np.where(r0 > 0, r0, 1.0) / rda
                    rho = np.where(infinite, rho_inf, rho_f if rho_f is not None else rho_inf)
                    jac = np.where(infinite, np.where(r0 > 0, r0, 1.0) / rda ** 2 * rw, seg * rw)
                    vals = F(X[:, None, None, :], E[:, :, None, :], rho)
                    contrib = vals * jac * rho
                # radii that underflow to 0 near the boundary carry zero weight
                contrib = np.where((jac > 0) & np.isfinite(contrib), contrib, 0.0)
                inner_f = np.sum(contrib, axis=-1)
                inner_c = 2.0 * np.sum(contrib[..., rcoarse], axis=-1)
                fine_x += np.sum(wth * inner_f, axis=-1)
                coarse_x += 2.0 * np.sum((wth * inner_c)[:, coarse], axis=-1)
        fine_total.append(float(np.sum(WX * fine_x)))
        coarse_total.append(float(np.sum(WX * coarse_x)))
    return math.fsum(fine_total), math.fsum(coarse_total)


def integrate_double_singular(
    F: Callable, domain, diag_order: float, spec: QuadratureSpec | None = None
) -> IntegralResult:
    """Integral of F over domain x domain with an integrable diagonal singularity.

    ``F(x, h)`` takes the point x and the offset h = y - x (trailing axis d).
    Passing the offset instead of y keeps |h| accurate near the diagonal.
    """
    spec = spec or QuadratureSpec()
    d = domain.dim
    if not diag_order > -d:
        raise ValueError("diagonal singularity must satisfy diag_order > -d")
    if spec.method is Method.MONTE_CARLO or d >= 3:
        return _double_mc(F, domain, diag_order, spec)
    if d == 1:
        lo, hi = domain.bounds()
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("unbounded interval domains are not supported")
        return _double_interval(F, lo, hi, spec)
    return _double_polar_bounded(F, domain, spec)


def _double_polar_bounded(F, domain, spec):
    if not domain.bounded:
        raise ValueError(f"unsupported domain for deterministic double integral: {domain!r}")
    prev = None
    value = err = math.nan
    evals = 0
    for level in range(2, min(spec.max_levels, 5) + 1):
        X, WX = domain.cubature(level)

        def radial(x, e):
            ext = domain.exit_distance(x[:, None, :], e)
            return np.stack([np.zeros_like(ext), ext], axis=-1)

        G = lambda x, e, rho: F(x, e * rho[..., None])
        fine, coarse = polar_double(G, X, WX, radial, domain.angular_breaks, level)
        evals += X.shape[0] * (2 ** level) * 100
        value = fine
        err = abs(fine - coarse)
        if prev is not None:
            err = min(err, abs(fine - prev)) if level >= 4 else abs(fine - prev)
            if err <= spec.tol(value):
                return IntegralResult(value, err, evals, True, Method.DOUBLE_EXPONENTIAL.value)
        prev = value
    return IntegralResult(value, err, evals, False, Method.DOUBLE_EXPONENTIAL.value)


def _double_mc(F, domain, diag_order, spec):
    """Importance sampling: x uniform in the domain, |h| with density ~ r^{d+diag_order-1}."""
    rng = np.random.default_rng(spec.seed)
    n = spec.mc_budget
    d = domain.dim
    vol = domain.volume()
    diam = domain.diameter()
    a = d + diag_order  # radial exponent including Jacobian, > 0
    vals = []
    for start in range(0, n, 65536):
        k = min(65536, n - start)
        x = domain.sample(rng, k)
        e = uniform_directions(rng, k, d)
        r = diam * rng.random(k) ** (1.0 / a)
        # density of h: a r^{a-1}/diam^a / (|S| r^{d-1})
        dens = a * r ** (a - 1) / diam ** a / (surface_area(d) * r ** (d - 1))
        y = x + r[:, None] * e
        inside = domain.contains(y)
        v = np.where(inside, F(x, r[:, None] * e) / dens, 0.0)
        vals.append(v * vol)
    vals = np.concatenate(vals)
    value = float(np.mean(vals))
    se = float(np.std(vals, ddof=1)) / math.sqrt(n)
    mc_spec = spec.with_method(Method.MONTE_CARLO)
    return IntegralResult(value, se, n, se <= mc_spec.tol(value), Method.MONTE_CARLO.value, True)


# ---------------------------------------------------------------------------
# minimization


def golden_section(g: Callable, a: float, b: float, tol: float = 1e-12, max_iter: int = 400):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(c) + abs(d)):
            break
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = g(d)
    return (c, gc) if gc < gd else (d, gd)


def minimize_scalar(g: Callable, a: float, b: float, tol: float = 1e-12, scan: int = 1024):
    """Minimize ``g`` on (a, b): 1024-point scan then golden-section on the best bracket.

    Exact for unimodal ``g`` up to ``tol``; best-effort otherwise.
    ``g`` is called with scalars.
    """
    xs = a + (b - a) * (np.arange(scan) + 0.5) / scan
    vals = np.array([g(float(x)) for x in xs])
    i = int(np.nanargmin(vals))
    lo = a if i == 0 else float(xs[i - 1])
    hi = b if i == scan - 1 else float(xs[i + 1])
    x, v = golden_section(g, lo, hi, tol)
    if vals[i] < v:
        return float(xs[i]), float(vals[i])
    return float(x), float(v)
