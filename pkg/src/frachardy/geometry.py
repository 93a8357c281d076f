"""Domains, boundary distance, exit distance along lines and the pseudodistance m_rho."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .quadrature import QuadratureSpec, IntegralResult, _integrate_de, de_nodes, integrate_sphere, total


class OutsideDomainError(ValueError):
    pass


class Domain:
    """Common interface; points carry a trailing axis of length ``dim``."""

    dim: int
    convex: bool = True
    bounded: bool = False

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError

    def exit_distance(self, x, e) -> np.ndarray:
        """Smallest t > 0 with x + t e outside the domain (``inf`` if none)."""
        raise NotImplementedError

    def dist_boundary(self, x) -> np.ndarray:
        raise NotImplementedError

    def vertices(self) -> np.ndarray:
        return np.empty((0, self.dim))

    def angular_breaks(self, x) -> np.ndarray:
        """Per-point sorted angles in [0, 2 pi] at which the exit distance has kinks (d = 2)."""
        x = np.asarray(x, dtype=float)
        V = self.vertices()
        n = x.shape[0]
        if V.shape[0] == 0:
            return np.tile([0.0, 2 * math.pi], (n, 1))
        diff = V[None, :, :] - x[:, None, :]
        ang = np.mod(np.arctan2(diff[..., 1], diff[..., 0]), 2 * math.pi)
        ang = np.sort(ang, axis=1)
        return np.concatenate([np.zeros((n, 1)), ang, np.full((n, 1), 2 * math.pi)], axis=1)

    def as_dict(self) -> dict:
        raise NotImplementedError


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != d:
        raise ValueError(f"expected trailing axis {d}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class HalfSpace(Domain):
    d: int

    @property
    def dim(self):
        return self.d

    def contains(self, x):
        return _as_points(x, self.d)[..., -1] > 0

    def exit_distance(self, x, e):
        x = _as_points(x, self.d)
        e = np.asarray(e, dtype=float)
        ed = e[..., -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(ed < 0, x[..., -1] / np.where(ed < 0, -ed, 1.0), np.inf)
        return t

    def dist_boundary(self, x):
        return np.abs(_as_points(x, self.d)[..., -1])

    def angular_breaks(self, x):
        n = np.asarray(x).shape[0]
        return np.tile([0.0, math.pi, 2 * math.pi], (n, 1))

    def as_dict(self):
        return {"type": "halfspace", "d": self.d}


@dataclass(frozen=True)
class PuncturedSpace(Domain):
    d: int
    convex = False

    @property
    def dim(self):
        return self.d

    def contains(self, x):
        return np.linalg.norm(_as_points(x, self.d), axis=-1) > 0

    def exit_distance(self, x, e):
        x = _as_points(x, self.d)
        e = np.asarray(e, dtype=float)
        # the ray meets the origin only if e points exactly at it
        r = np.linalg.norm(x, axis=-1)
        hit = np.isclose(np.sum(x * e, axis=-1), -r, rtol=0, atol=1e-15 * np.maximum(r, 1))
        return np.where(hit, r, np.inf)

    def dist_boundary(self, x):
        return np.linalg.norm(_as_points(x, self.d), axis=-1)

    def as_dict(self):
        return {"type": "punctured", "d": self.d}


@dataclass(frozen=True)
class Interval(Domain):
    a: float
    b: float
    bounded = True

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("empty interval")

    @property
    def dim(self):
        return 1

    def bounds(self):
        return self.a, self.b

    def contains(self, x):
        x = _as_points(x, 1)[..., 0]
        return (x > self.a) & (x < self.b)

    def exit_distance(self, x, e):
        x = _as_points(x, 1)[..., 0]
        e = np.asarray(e, dtype=float)[..., 0]
        return np.where(e > 0, (self.b - x) / np.where(e > 0, e, 1), (x - self.a) / np.where(e < 0, -e, 1))

    def dist_boundary(self, x):
        x = _as_points(x, 1)[..., 0]
        inside = np.minimum(x - self.a, self.b - x)
        return np.abs(inside)

    def volume(self):
        return self.b - self.a

    def diameter(self):
        return self.b - self.a

    def sample(self, rng, n):
        return (self.a + (self.b - self.a) * rng.random(n))[:, None]

    def vertices(self):
        return np.array([[self.a], [self.b]])

    def as_dict(self):
        return {"type": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple
    radius: float
    bounded = True

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def dim(self):
        return len(self.center)

    def contains(self, x):
        x = _as_points(x, self.dim)
        return np.linalg.norm(x - np.array(self.center), axis=-1) < self.radius

    def exit_distance(self, x, e):
        z = _as_points(x, self.dim) - np.array(self.center)
        e = np.asarray(e, dtype=float)
        b = np.sum(z * e, axis=-1)
        c = np.sum(z * z, axis=-1) - self.radius ** 2
        disc = np.sqrt(np.maximum(b * b - c, 0.0))
        # -b + disc, written to avoid cancellation when b > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(b > 0, -c / (b + disc), disc - b)
        return np.maximum(t, 0.0)

    def dist_boundary(self, x):
        x = _as_points(x, self.dim)
        return np.abs(self.radius - np.linalg.norm(x - np.array(self.center), axis=-1))

    def volume(self):
        d = self.dim
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius ** d

    def diameter(self):
        return 2 * self.radius

    def sample(self, rng, n):
        d = self.dim
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / d)
        return np.array(self.center) + r[:, None] * g

    def cubature(self, level: int):
        """Polar rule about the center (d = 2): tanh-sinh in radius, trapezoid in angle."""
        if self.dim != 2:
            raise ValueError("cubature implemented for d = 2")
        r, _, _, wr, _ = de_nodes(0.0, self.radius, level, 3.0)
        m = 2 ** (level + 3)
        th = 2 * math.pi * np.arange(m) / m
        R, T = np.meshgrid(r, th, indexing="ij")
        X = np.stack([self.center[0] + R * np.cos(T), self.center[1] + R * np.sin(T)], axis=-1)
        W = (wr[:, None] * R) * (2 * math.pi / m)
        return X.reshape(-1, 2), W.reshape(-1)

    def as_dict(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class ConvexPolytope(Domain):
    """Intersection of half-spaces ``normals @ x <= offsets``."""

    normals: tuple
    offsets: tuple
    bounded = True

    def __post_init__(self):
        N = np.atleast_2d(np.asarray(self.normals, dtype=float))
        c = np.asarray(self.offsets, dtype=float).reshape(-1)
        if N.shape[0] != c.shape[0]:
            raise ValueError("normals and offsets disagree in length")
        norms = np.linalg.norm(N, axis=1)
        # leave unit normals alone so that rebuilding from as_dict() is exact
        norms = np.where(np.abs(norms - 1.0) <= 4e-16, 1.0, norms)
        object.__setattr__(self, "normals", tuple(tuple(float(v) for v in row) for row in N / norms[:, None]))
        object.__setattr__(self, "offsets", tuple(float(v) for v in c / norms))

    @property
    def dim(self):
        return len(self.normals[0])

    @property
    def _N(self):
        return np.asarray(self.normals)

    @property
    def _c(self):
        return np.asarray(self.offsets)

    def contains(self, x):
        x = _as_points(x, self.dim)
        return np.all(x @ self._N.T < self._c, axis=-1)

    def exit_distance(self, x, e):
        x = _as_points(x, self.dim)
        e = np.asarray(e, dtype=float)
        x, e = np.broadcast_arrays(x, e)
        ne = e @ self._N.T
        slack = self._c - x @ self._N.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(ne > 0, slack / np.where(ne > 0, ne, 1.0), np.inf)
        return np.maximum(np.min(t, axis=-1), 0.0)

    def dist_boundary(self, x):
        x = _as_points(x, self.dim)
        slack = self._c - x @ self._N.T
        inside = np.all(slack > 0, axis=-1)
        interior = np.min(slack, axis=-1)
        if np.all(inside):
            return interior
        out = np.array(interior, dtype=float)
        flat = x.reshape(-1, self.dim)
        res = out.reshape(-1)
        for i in np.flatnonzero(~inside.reshape(-1)):
            res[i] = self._exterior_distance(flat[i])
        return res.reshape(out.shape)

    def _exterior_distance(self, y):
        cons = {"type": "ineq", "fun": lambda z: self._c - self._N @ z, "jac": lambda z: -self._N}
        start = np.mean(self.vertices(), axis=0) if self.dim == 2 else np.zeros(self.dim)
        sol = optimize.minimize(lambda z: np.sum((z - y) ** 2), start, jac=lambda z: 2 * (z - y),
                                constraints=[cons], method="SLSQP", options={"ftol": 1e-14})
        return float(np.linalg.norm(sol.x - y))

    def vertices(self):
        if self.dim != 2:
            return np.empty((0, self.dim))
        N, c = self._N, self._c
        pts = []
        for i in range(len(c)):
            for j in range(i + 1, len(c)):
                A = N[[i, j]]
                if abs(np.linalg.det(A)) < 1e-14:
                    continue
                v = np.linalg.solve(A, c[[i, j]])
                if np.all(N @ v <= c + 1e-12):
                    pts.append(v)
        return np.unique(np.round(np.array(pts), 14), axis=0) if pts else np.empty((0, 2))

    def volume(self):
        V = self.vertices()
        ang = np.arctan2(*(V - V.mean(axis=0)).T[::-1])
        V = V[np.argsort(ang)]
        x, y = V[:, 0], V[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def diameter(self):
        V = self.vertices()
        return float(np.max(np.linalg.norm(V[:, None] - V[None], axis=-1)))

    def sample(self, rng, n):
        V = self.vertices()
        lo, hi = V.min(axis=0), V.max(axis=0)
        out = []
        while sum(len(o) for o in out) < n:
            z = lo + (hi - lo) * rng.random((2 * n, self.dim))
            out.append(z[self.contains(z)])
        return np.concatenate(out)[:n]

    def as_dict(self):
        return {"type": "polytope", "normals": [list(r) for r in self.normals], "offsets": list(self.offsets)}


class Box(ConvexPolytope):
    """Axis-aligned box [lo, hi]."""

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(hi <= lo):
            raise ValueError("empty box")
        d = lo.size
        eye = np.eye(d)
        super().__init__(tuple(map(tuple, np.vstack([eye, -eye]))), tuple(np.concatenate([hi, -lo])))
        object.__setattr__(self, "lo", tuple(lo))
        object.__setattr__(self, "hi", tuple(hi))

    def __repr__(self):
        return f"Box(lo={self.lo}, hi={self.hi})"

    def dist_boundary(self, x):
        x = _as_points(x, self.dim)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        inside = np.all((x > lo) & (x < hi), axis=-1)
        interior = np.min(np.minimum(x - lo, hi - x), axis=-1)
        outside = np.linalg.norm(np.maximum(np.maximum(lo - x, x - hi), 0.0), axis=-1)
        return np.where(inside, interior, outside)

    def vertices(self):
        if self.dim != 2:
            return np.empty((0, self.dim))
        (x0, y0), (x1, y1) = self.lo, self.hi
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])

    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def diameter(self):
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))

    def sample(self, rng, n):
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return lo + (hi - lo) * rng.random((n, self.dim))

    def cubature(self, level: int):
        """Tensor tanh-sinh rule (d = 2)."""
        if self.dim != 2:
            raise ValueError("cubature implemented for d = 2")
        x1, _, _, w1, _ = de_nodes(self.lo[0], self.hi[0], level, 3.0)
        x2, _, _, w2, _ = de_nodes(self.lo[1], self.hi[1], level, 3.0)
        X = np.stack(np.meshgrid(x1, x2, indexing="ij"), axis=-1).reshape(-1, 2)
        return X, np.outer(w1, w2).reshape(-1)

    def as_dict(self):
        return {"type": "box", "lo": list(self.lo), "hi": list(self.hi)}


def parse_domain(desc: "str | dict", d: int | None = None) -> Domain:
    """Build a domain from ``'halfspace'``, ``'box:0,0,4,4'``, ``'ball:0,0,1'``, ``'interval:-1,1'``, or a dict."""
    if isinstance(desc, dict):
        kind = desc["type"]
        if kind == "halfspace":
            return HalfSpace(int(desc["d"]))
        if kind == "punctured":
            return PuncturedSpace(int(desc["d"]))
        if kind == "interval":
            return Interval(desc["a"], desc["b"])
        if kind == "ball":
            return Ball(tuple(desc["center"]), desc["radius"])
        if kind == "box":
            return Box(desc["lo"], desc["hi"])
        if kind == "polytope":
            return ConvexPolytope(tuple(map(tuple, desc["normals"])), tuple(desc["offsets"]))
        raise ValueError(f"unknown domain type {kind!r}")
    kind, _, rest = desc.partition(":")
    nums = [float(v) for v in rest.split(",") if v.strip()]
    kind = kind.strip().lower()
    if kind in ("halfspace", "punctured"):
        dim = int(nums[0]) if nums else d
        if dim is None:
            raise ValueError("dimension required")
        return HalfSpace(dim) if kind == "halfspace" else PuncturedSpace(dim)
    if kind == "interval":
        return Interval(*nums)
    if kind == "ball":
        return Ball(tuple(nums[:-1]), nums[-1])
    if kind == "box":
        k = len(nums) // 2
        return Box(nums[:k], nums[k:])
    raise ValueError(f"cannot parse domain {desc!r}")


# ---------------------------------------------------------------------------


def dist_boundary(x, dom: Domain):
    out = dom.dist_boundary(x)
    return float(out) if np.ndim(out) == 0 else out


def dir_distance(x, omega, dom: Domain):
    """inf{|t| : x + t omega not in dom}, over both signs of t."""
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if not np.all(dom.contains(x)):
        raise OutsideDomainError("dir_distance needs an interior point")
    out = np.minimum(dom.exit_distance(x, omega), dom.exit_distance(x, -omega))
    return float(out) if np.ndim(out) == 0 else out


# printed prefactor versus the one making m_rho(x) = x_d on the half-space
NORMALIZATIONS = ("printed", "calibrated")


def m_rho_prefactor(d: int, rho: float, normalization: str = "printed") -> float:
    g = math.gamma((1 + rho) / 2) / math.gamma((d + rho) / 2)
    if normalization == "printed":
        return 2 * math.pi ** (d / 2) * g
    if normalization == "calibrated":
        return 2 * math.pi ** ((d - 1) / 2) * g
    raise ValueError(f"normalization must be one of {NORMALIZATIONS}")


def halfspace_m_rho_ratio(d: int, rho: float, normalization: str = "printed") -> float:
    """Closed-form m_rho(x)/x_d on the half-space for the given normalization."""
    moment = 2 * math.pi ** ((d - 1) / 2) * math.gamma((rho + 1) / 2) / math.gamma((d + rho) / 2)
    return (m_rho_prefactor(d, rho, normalization) / moment) ** (1.0 / rho)


def _kinks_2d(x, dom: Domain):
    """Angles in [0, pi) where theta -> min(exit(theta), exit(theta + pi)) is not smooth."""
    x = np.asarray(x, dtype=float)
    V = dom.vertices()
    br = []
    if V.shape[0]:
        diff = V - x
        br.extend(np.mod(np.arctan2(diff[:, 1], diff[:, 0]), math.pi))
    if isinstance(dom, HalfSpace):
        br.append(0.0)

    def gap(th):
        e = np.array([math.cos(th), math.sin(th)])
        return float(dom.exit_distance(x, e) - dom.exit_distance(x, -e))

    grid = np.linspace(0.0, math.pi, 721)
    E = np.stack([np.cos(grid), np.sin(grid)], axis=-1)
    with np.errstate(invalid="ignore"):
        vals = dom.exit_distance(x, E) - dom.exit_distance(x, -E)
    for t0, t1, v0, v1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if np.isfinite(v0) and np.isfinite(v1) and v0 * v1 < 0:
            br.append(optimize.brentq(gap, t0, t1, xtol=1e-15))
    return sorted(set(float(b) for b in br))


def sphere_inverse_power(x, rho: float, dom: Domain, spec: QuadratureSpec | None = None) -> IntegralResult:
    """Integral over S^{d-1} of d_omega(x)**(-rho); infinite d_omega contributes 0."""
    spec = spec or QuadratureSpec()
    x = np.asarray(x, dtype=float)
    d = dom.dim

    def g(omega):
        with np.errstate(divide="ignore"):
            dw = np.minimum(dom.exit_distance(x, omega), dom.exit_distance(x, -omega))
            return np.where(np.isfinite(dw), dw ** (-rho), 0.0)

    if d == 2:
        # d_omega is even in omega: integrate over a half circle and double
        kinks = _kinks_2d(x, dom)
        cuts = sorted({0.0, math.pi, *kinks})
        parts = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo > 1e-14:
                fn = lambda th: g(np.stack([np.cos(th), np.sin(th)], axis=-1))
                parts.append(_integrate_de(fn, lo, hi, spec, False, tmax=4.0))
        return total(parts).scaled(2.0)
    breaks = (math.pi / 2,) if isinstance(dom, HalfSpace) else ()
    return integrate_sphere(g, d, spec, breaks=breaks)


def m_rho(x, rho: float, dom: Domain, spec: QuadratureSpec | None = None, normalization: str = "printed") -> float:
    """Pseudodistance m_rho(x) from the direction-averaged exit distances."""
    if dom.dim < 2:
        raise ValueError("m_rho needs d >= 2")
    if not np.all(dom.contains(x)):
        raise OutsideDomainError("m_rho needs an interior point")
    res = sphere_inverse_power(x, rho, dom, spec)
    return (m_rho_prefactor(dom.dim, rho, normalization) / res.value) ** (1.0 / rho)


# ---------------------------------------------------------------------------
# Hardy-Sobolev-Maz'ya on a general domain


def inverse_m_power(X, rho: float, dom: Domain, spec: QuadratureSpec | None = None,
                    normalization: str = "printed") -> np.ndarray:
    """m_rho(x)^(-rho) at each row of X, straight from the sphere integral."""
    X = _as_points(X, dom.dim)
    pref = m_rho_prefactor(dom.dim, rho, normalization)
    flat = X.reshape(-1, dom.dim)
    vals = np.array([sphere_inverse_power(x, rho, dom, spec).value for x in flat])
    return (vals / pref).reshape(X.shape[:-1])


def _rect_rule(lo, hi, cuts, n):
    """Tensor Gauss rule on [lo, hi] split at the per-axis ``cuts``."""
    g, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    for k in range(len(lo)):
        e = [lo[k]] + sorted(c for c in cuts[k] if lo[k] < c < hi[k]) + [hi[k]]
        nodes.append(np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * g for a, b in zip(e[:-1], e[1:])]))
        weights.append(np.concatenate([0.5 * (b - a) * w for a, b in zip(e[:-1], e[1:])]))
    X = np.stack(np.meshgrid(*nodes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    W = np.prod(np.stack(np.meshgrid(*weights, indexing="ij"), axis=-1), axis=-1).reshape(-1)
    return X, W


def _m_kink_cuts(dom: Domain):
    """Per-axis lines where m_rho has a kink: midlines between parallel box facets."""
    if isinstance(dom, Box):
        return [[0.5 * (a + b)] for a, b in zip(dom.lo, dom.hi)]
    return None


def _cut_support_integral(u, f, cuts, spec: QuadratureSpec) -> IntegralResult:
    """Integral of f(x) over the support ball of u with a Gauss grid split at ``cuts``."""
    c, R = u.support.bounding_ball()
    c = np.asarray(c, dtype=float)
    prev = None
    for n in (8, 12, 16, 24, 32):
        X, W = _rect_rule(c - R, c + R, cuts, n)
        keep = np.linalg.norm(X - c, axis=-1) < R
        val = float(np.sum(W[keep] * f(X[keep])))
        if prev is not None:
            err = abs(val - prev)
            if err <= spec.tol(val):
                return IntegralResult(val, err, int(keep.sum()), True, "de")
        prev = val
    return IntegralResult(val, err, int(keep.sum()), False, "de")


def verify_hsm_general(u, params, dom: Domain, spec: QuadratureSpec | None = None,
                       normalization: str = "printed"):
    """Positivity of E[u] - D_{d,s,p} int |u|^p m_sp^-sp over a domain, with the Sobolev term recorded.

    The energy is unweighted and restricted to the domain.  For convex
    domains the comparison of int |u|^p m^-sp with int |u|^p dist^-sp is
    added as information; it depends on the normalization of m.
    """
    from .functionals import (
        OutsideSupportError, VerificationReport, _default_spec, _disk_terms, _mc_terms, _sharp_constant,
        _support_integral, energy, make_setting, sobolev_term, tolerance_total,
    )
    from .model import FractionalParams, Regime, validate

    validate(params, Regime.HSM_GENERAL)
    if dom.dim != params.d:
        raise ValueError(f"domain has d={dom.dim}, params have d={params.d}")
    spec = _default_spec(spec, params.d)
    sp = params.sp
    D = _sharp_constant(FractionalParams(params.d, params.s, params.p), Regime.HALF_SPACE, spec)
    extras = {"m_rho_normalization": normalization,
              "halfspace_m_over_xd": halfspace_m_rho_ratio(params.d, sp, normalization)}
    if u.amplitude == 0.0:
        zero = IntegralResult.exact(0.0)
        return VerificationReport(params, Regime.HSM_GENERAL.value, zero, zero, D.value, None, 0.0, zero,
                                  0.0, 0.0, True, "pass", {**extras, "delta": 0.0})
    c, R = u.support.bounding_ball()
    c = np.asarray(c, dtype=float)
    if not (np.all(dom.contains(c)) and float(dom.dist_boundary(c)) > R):
        raise OutsideSupportError("test function support must lie strictly inside the domain")
    if isinstance(dom, HalfSpace):
        E = energy(u, params, Regime.HALF_SPACE, spec)
    else:
        st = make_setting(params, "domain")
        if params.d == 2:
            E, _ = _disk_terms(st, u, dom, False, spec)
        else:
            E, _ = _mc_terms(st, u, dom, False, spec)
    st = make_setting(params, "domain")
    p = params.p
    g = lambda ux, dx: np.abs(ux) ** p
    inv_m = lambda X: inverse_m_power(X, sp, dom, normalization=normalization)
    cuts = _m_kink_cuts(dom) if params.d == 2 else None
    if cuts is not None:
        H = _cut_support_integral(u, lambda X: g(u(X), None) * inv_m(X), cuts, spec)
    else:
        H = _support_integral(u, st, g, spec, point_weight=inv_m)
    S = sobolev_term(u, params, spec, weighted=False)
    delta = E.value - D.value * H.value
    tol = tolerance_total(E, H, D.value, D.error, None, 0.0)
    passed = delta >= -tol
    ok = E.converged and H.converged and S.converged
    status = ("pass" if passed else "violation") if ok else "non-converged"
    extras.update({"delta": delta, "ratio_delta_sobolev": delta / S.value if S.value > 0 else None,
                   "test_function": u.as_dict()})
    if dom.convex:
        Hd = _support_integral(u, st, g, spec, point_weight=lambda X: dom.dist_boundary(X) ** (-sp))
        extras["convex_comparison"] = {
            "hardy_m": H.value, "hardy_dist": Hd.value, "hardy_dist_converged": Hd.converged,
            "m_not_above_dist": bool(H.value >= Hd.value),
            "informational": True,
        }
    else:
        extras["convex_comparison"] = None
    return VerificationReport(params, Regime.HSM_GENERAL.value, E, H, D.value, None, 0.0, S, delta, tol,
                              passed, status, extras)
