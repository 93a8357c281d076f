"""Test functions, nonlocal energies, Hardy terms, remainders, potentials and the verifiers.

All double integrals are organised as an outer integral over a bounded set S
containing ``supp u`` and an inner integral over y in the whole domain; pairs
with both points outside S contribute nothing, and pairs with exactly one
point in S are folded onto x in S by adding the kernel with swapped weights.
Increments u(x + h) - u(x) are computed without cancellation so the
near-diagonal part of the kernel can be resolved down to |h| ~ 1e-300.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .constants import SharpConstant, constant_A, constant_C, constant_Cp, constant_D, d_prefactor, log_abs_expm1
from .model import FractionalParams, Regime, RegimeError, validate
from .quadrature import (
    IntegralResult,
    Location,
    Method,
    QuadratureSpec,
    SingularityDescriptor,
    de_nodes,
    de_rule,
    integrate_1d,
    surface_area,
    total,
    uniform_directions,
)


class OutsideSupportError(ValueError):
    """A test function's support touches the singular set or leaves the domain."""


# ---------------------------------------------------------------------------
# supports
#
# A support describes the bump through "squared normalised coordinates"
# q_i(x) (the bump is exp(-sum 1/(1 - q_i)) where all q_i < 1) and a first
# normalised coordinate z_1(x) used by the odd profile.  ``_dq`` returns
# q(x + h) - q(x) computed from h directly.


def _pts(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"expected points with trailing axis {d}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class BallSupport:
    center: tuple
    radius: float

    def __post_init__(self):
        c = self.center if np.ndim(self.center) else (self.center,)
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def _z(self, x):
        return (x - np.array(self.center)) / self.radius

    def _q(self, x):
        z = self._z(x)
        return np.sum(z * z, axis=-1, keepdims=True)

    def _dq(self, x, h):
        z = self._z(x)
        dz = h / self.radius
        return np.sum(dz * (2.0 * z + dz), axis=-1, keepdims=True)

    def _z1(self, x):
        return self._z(x)[..., 0]

    def _dz1(self, x, h):
        return h[..., 0] / self.radius

    def bounding_ball(self):
        return np.array(self.center), self.radius

    def interval(self):
        return self.center[0] - self.radius, self.center[0] + self.radius

    def lower_xd(self) -> float:
        return self.center[-1] - self.radius

    def origin_clearance(self) -> float:
        return max(float(np.linalg.norm(self.center)) - self.radius, 0.0)

    def scaled(self, lam: float) -> "BallSupport":
        return BallSupport(tuple(lam * c for c in self.center), lam * self.radius)

    def as_dict(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class BoxSupport:
    """Product bump on the box lo < x < hi."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = self.lo if np.ndim(self.lo) else (self.lo,)
        hi = self.hi if np.ndim(self.hi) else (self.hi,)
        object.__setattr__(self, "lo", tuple(float(v) for v in lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in hi))
        if len(self.lo) != len(self.hi) or not all(a < b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box needs lo < hi componentwise")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def _mid(self):
        return 0.5 * (np.array(self.lo) + np.array(self.hi))

    @property
    def _half(self):
        return 0.5 * (np.array(self.hi) - np.array(self.lo))

    def _z(self, x):
        return (x - self._mid) / self._half

    def _q(self, x):
        z = self._z(x)
        return z * z

    def _dq(self, x, h):
        z = self._z(x)
        dz = h / self._half
        return dz * (2.0 * z + dz)

    def _z1(self, x):
        return self._z(x)[..., 0]

    def _dz1(self, x, h):
        return h[..., 0] / self._half[0]

    def bounding_ball(self):
        return self._mid, float(np.linalg.norm(self._half))

    def interval(self):
        return self.lo[0], self.hi[0]

    def lower_xd(self) -> float:
        return self.lo[-1]

    def origin_clearance(self) -> float:
        lo, hi = np.array(self.lo), np.array(self.hi)
        return float(np.linalg.norm(np.maximum(np.maximum(lo, -hi), 0.0)))

    def scaled(self, lam: float) -> "BoxSupport":
        return BoxSupport(tuple(lam * v for v in self.lo), tuple(lam * v for v in self.hi))

    def as_dict(self):
        return {"type": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class AnnulusSupport:
    """Radial bump on r_in < |x - center| < r_out."""

    r_in: float
    r_out: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        c = self.center if np.ndim(self.center) else (self.center,)
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not 0.0 <= self.r_in < self.r_out:
            raise ValueError("annulus needs 0 <= r_in < r_out")
        if len(self.center) < 2:
            raise ValueError("annulus supports need d >= 2")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def _mid(self):
        return 0.5 * (self.r_in + self.r_out)

    @property
    def _half(self):
        return 0.5 * (self.r_out - self.r_in)

    def _rho(self, x):
        return np.linalg.norm(x - np.array(self.center), axis=-1)

    def _drho(self, x, h):
        z = x - np.array(self.center)
        r0 = np.linalg.norm(z, axis=-1)
        r1 = np.linalg.norm(z + h, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            dr = np.sum(h * (2.0 * z + h), axis=-1) / (r0 + r1)
        return np.where(r0 + r1 > 0, dr, 0.0), r0, r1

    def _q(self, x):
        z = (self._rho(x) - self._mid) / self._half
        return (z * z)[..., None]

    def _dq(self, x, h):
        dr, r0, r1 = self._drho(x, h)
        return (dr * (r0 + r1 - 2.0 * self._mid) / self._half ** 2)[..., None]

    def _z1(self, x):
        return (self._rho(x) - self._mid) / self._half

    def _dz1(self, x, h):
        return self._drho(x, h)[0] / self._half

    def bounding_ball(self):
        return np.array(self.center), self.r_out

    def interval(self):
        raise ValueError("annulus supports have no 1D interval")

    def lower_xd(self) -> float:
        return self.center[-1] - self.r_out

    def origin_clearance(self) -> float:
        c = float(np.linalg.norm(self.center))
        return max(c - self.r_out, self.r_in - c, 0.0)

    def scaled(self, lam: float) -> "AnnulusSupport":
        return AnnulusSupport(lam * self.r_in, lam * self.r_out, tuple(lam * v for v in self.center))

    def as_dict(self):
        return {"type": "annulus", "r_in": self.r_in, "r_out": self.r_out, "center": list(self.center)}


@dataclass(frozen=True)
class SlabSupport:
    """Profile depending on x_d only, supported in a < x_d < b.

    Such profiles have finite energy only on the line, so d must be 1; for
    d >= 2 use a box.
    """

    a: float
    b: float
    d: int = 1

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("slab needs a < b")
        if self.d != 1:
            raise ValueError("slab profiles have infinite energy for d > 1; use a BoxSupport")

    @property
    def dim(self) -> int:
        return 1

    def _box(self):
        return BoxSupport((self.a,), (self.b,))

    def _q(self, x):
        return self._box()._q(x)

    def _dq(self, x, h):
        return self._box()._dq(x, h)

    def _z1(self, x):
        return self._box()._z1(x)

    def _dz1(self, x, h):
        return self._box()._dz1(x, h)

    def bounding_ball(self):
        return np.array([0.5 * (self.a + self.b)]), 0.5 * (self.b - self.a)

    def interval(self):
        return self.a, self.b

    def lower_xd(self) -> float:
        return self.a

    def origin_clearance(self) -> float:
        return self._box().origin_clearance()

    def scaled(self, lam: float) -> "SlabSupport":
        return SlabSupport(lam * self.a, lam * self.b)

    def as_dict(self):
        return {"type": "slab", "a": self.a, "b": self.b}


Support = BallSupport | BoxSupport | AnnulusSupport | SlabSupport


def parse_support(desc: "str | dict") -> Support:
    """``'ball:c1,..,cd,r'``, ``'box:lo1,..,lod,hi1,..,hid'``, ``'annulus:r_in,r_out'``, ``'slab:a,b'`` or a dict."""
    if isinstance(desc, dict):
        kind = desc["type"]
        if kind == "ball":
            return BallSupport(tuple(desc["center"]), desc["radius"])
        if kind == "box":
            return BoxSupport(tuple(desc["lo"]), tuple(desc["hi"]))
        if kind == "annulus":
            return AnnulusSupport(desc["r_in"], desc["r_out"], tuple(desc.get("center", (0.0, 0.0))))
        if kind == "slab":
            return SlabSupport(desc["a"], desc["b"])
        raise ValueError(f"unknown support type {kind!r}")
    kind, _, rest = desc.partition(":")
    vals = [float(v) for v in rest.split(",")] if rest else []
    if kind == "ball":
        return BallSupport(tuple(vals[:-1]), vals[-1])
    if kind == "box":
        k = len(vals) // 2
        return BoxSupport(tuple(vals[:k]), tuple(vals[k:]))
    if kind == "annulus":
        return AnnulusSupport(vals[0], vals[1], tuple(vals[2:]) or (0.0, 0.0))
    if kind == "slab":
        return SlabSupport(vals[0], vals[1])
    raise ValueError(f"unknown support {desc!r}")


# ---------------------------------------------------------------------------
# test functions

# turning point of z exp(-1/(1 - z^2)) on (0, 1): (1 - z^2)^2 = 2 z^2
_ODD_PEAK = (math.sqrt(6.0) - math.sqrt(2.0)) / 2.0


@dataclass(frozen=True)
class TestFunction:
    """Amplitude times the bump exp(-1/(1 - |z|^2)) rescaled to ``support``.

    ``profile='odd'`` multiplies by the first normalised coordinate, giving a
    sign-changing C^infinity function with the same support.  ``'odd_abs'``
    is the modulus of the odd profile: nonnegative and Lipschitz, with a kink
    along the nodal set.
    """

    __test__ = False  # keep pytest from collecting this class

    support: Support
    amplitude: float = 1.0
    profile: str = "even"
    smoothness: str = "C1"

    def __post_init__(self):
        if self.profile not in ("even", "odd", "odd_abs"):
            raise ValueError("profile must be 'even', 'odd' or 'odd_abs'")

    @property
    def is_odd(self) -> bool:
        """True when the profile carries the first-coordinate factor."""
        return self.profile != "even"

    @property
    def dim(self) -> int:
        return self.support.dim

    @property
    def nonnegative(self) -> bool:
        return self.profile != "odd" and self.amplitude >= 0

    @property
    def sup_norm_bound(self) -> float:
        return abs(self.amplitude) * math.exp(-1.0)

    def scaled(self, c: float) -> "TestFunction":
        return replace(self, amplitude=c * self.amplitude)

    def dilated(self, lam: float) -> "TestFunction":
        """x -> u(x / lam)."""
        return replace(self, support=self.support.scaled(lam))

    def _parts(self, x):
        q = self.support._q(x)
        inside = np.all(q < 1.0, axis=-1)
        with np.errstate(divide="ignore"):
            L = np.sum(1.0 / (1.0 - np.where(q < 1.0, q, 0.0)), axis=-1)
        m = self.support._z1(x) if self.is_odd else 1.0
        return q, inside, L, m

    def __call__(self, x):
        x = _pts(x, self.dim)
        _, inside, L, m = self._parts(x)
        v = np.where(inside, self.amplitude * m * np.exp(-L), 0.0)
        return np.abs(v) if self.profile == "odd_abs" else v

    def increment(self, x, h):
        """u(x + h) - u(x), accurate when |h| is tiny."""
        x = _pts(x, self.dim)
        h = _pts(h, self.dim)
        x, h = np.broadcast_arrays(x, h)
        q, in_x, L, m = self._parts(x)
        dq = self.support._dq(x, h)
        q1 = q + dq
        in_y = np.all(q1 < 1.0, axis=-1)
        ok = in_x & in_y
        qs = np.where(ok[..., None], q, 0.0)
        q1s = np.where(ok[..., None], q1, 0.0)
        dqs = np.where(ok[..., None], dq, 0.0)
        # 1/(1 - q1) - 1/(1 - q) = (q1 - q) / ((1 - q)(1 - q1))
        dL = np.sum(dqs / ((1.0 - qs) * (1.0 - q1s)), axis=-1)
        with np.errstate(divide="ignore"):
            L1 = np.sum(1.0 / (1.0 - np.where(q1 < 1.0, q1, 0.0)), axis=-1)
        if self.is_odd:
            dm = self.support._dz1(x, h)
            m1 = m + dm
        else:
            dm, m1 = 0.0, 1.0
        A = self.amplitude
        # exp(-L1) - exp(-L): expm1 form where it cancels, plain difference elsewhere
        small = np.abs(dL) < 1.0
        diff = np.where(small, np.exp(-L) * np.expm1(-np.where(small, dL, 0.0)), np.exp(-L1) - np.exp(-L))
        both = A * (np.exp(-L1) * dm + m * diff)
        ux = np.where(in_x, A * m * np.exp(-L), 0.0)
        uy = A * m1 * np.exp(-L1)
        inc = np.where(ok, both, np.where(in_x, -ux, np.where(in_y, uy, 0.0)))
        if self.profile != "odd_abs":
            return inc
        # |u(x) + inc| - |u(x)|: exact sign flip when both ends share a sign
        sx = np.sign(ux)
        same = sx * np.sign(ux + inc) > 0
        return np.where(same, sx * inc, np.abs(ux + inc) - np.abs(ux))

    def level_points_1d(self, x):
        """For d = 1: points y != x of the support interval with u(y) = u(x), padded with nan.

        These are kinks of |u(x) - u(y)|^p, used as quadrature breaks.
        """
        lo, hi = self.support.interval()
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        z = (np.asarray(x, dtype=float) - mid) / half
        if self.profile == "even":
            return (mid - half * z)[..., None]
        # odd: zeta * exp(-1/(1 - zeta^2)) is monotone on [0, z0] and [z0, 1);
        # the other preimage of g(|z|) lies on the opposite branch
        a = np.abs(z)
        g = lambda t: t * np.exp(-1.0 / (1.0 - t * t))
        target = g(np.minimum(a, 1.0 - 1e-16))
        left = a > _ODD_PEAK
        lo_b = np.where(left, 0.0, _ODD_PEAK)
        hi_b = np.where(left, _ODD_PEAK, 1.0)
        rising = left  # g increases on [0, z0]
        for _ in range(80):
            c = 0.5 * (lo_b + hi_b)
            above = g(c) > target
            move_hi = np.where(rising, above, ~above)
            hi_b = np.where(move_hi, c, hi_b)
            lo_b = np.where(move_hi, lo_b, c)
        other = 0.5 * (lo_b + hi_b)
        other = np.where((a > 0) & (a < 1), other, np.nan)
        same = mid + half * np.sign(z) * other
        if self.profile == "odd":
            return same[..., None]
        # the modulus also takes the value at the mirror images
        return np.stack([same, mid - half * z, mid - half * np.sign(z) * other], axis=-1)

    def critical_points_1d(self) -> tuple:
        lo, hi = self.support.interval()
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        if self.is_odd:
            return (mid - _ODD_PEAK * half, mid + _ODD_PEAK * half)
        return (mid,)

    def nodal_points_1d(self) -> tuple:
        if self.is_odd:
            lo, hi = self.support.interval()
            return (0.5 * (lo + hi),)
        return ()

    def as_dict(self):
        return {"support": self.support.as_dict(), "amplitude": self.amplitude, "profile": self.profile}


def bump(
    support: "Support | str | dict",
    amplitude: float = 1.0,
    profile: str = "even",
    regime: "Regime | str | None" = None,
    params: FractionalParams | None = None,
) -> TestFunction:
    """Smooth bump on ``support``; with a regime, check the support clears the singular set.

    Half-space regimes need supp u inside x_d > 0 at positive distance, the
    full space needs it away from the origin.  (These are always required
    here, not only when the weight is singular: the integrators assume it.)
    """
    if not isinstance(support, (BallSupport, BoxSupport, AnnulusSupport, SlabSupport)):
        support = parse_support(support)
    u = TestFunction(support, float(amplitude), profile)
    if regime is not None:
        check_support(u, regime)
    if params is not None and params.d != u.dim:
        raise ValueError(f"support dimension {u.dim} does not match d={params.d}")
    return u


def check_support(u: TestFunction, regime: "Regime | str") -> float:
    """Return the clearance of supp u from the regime's singular set; raise if it is not positive."""
    regime = Regime.parse(regime)
    if regime.is_half_space:
        clearance = u.support.lower_xd()
        what = "the boundary x_d = 0"
    else:
        clearance = u.support.origin_clearance()
        what = "the origin"
    if not clearance > 0:
        raise OutsideSupportError(f"support {u.support.as_dict()} touches {what}")
    return clearance


# ---------------------------------------------------------------------------
# settings: everything a weight depends on is a "distance" delta
#
#   half-space   delta = x_d        w = delta^-gamma_half   omega = delta(x)^alpha  delta(y)^beta
#   full space   delta = |x|        w = delta^-gamma_full   omega = delta(x)^-alpha delta(y)^-beta
#   (0, 1)       delta = x          w = delta^((sp-1)/p)    omega = 1
#   (-1, 1)      delta = 1 - |x|    w = delta^((sp-1)/p)    omega = 1
#   domain       unweighted energy on a general domain


@dataclass(frozen=True)
class Setting:
    kind: str
    d: int
    p: float
    sp: float
    kappa: float
    a1: float
    b1: float
    hardy_exp: float

    @property
    def boundary_points(self) -> tuple:
        return (-1.0, 1.0) if self.kind == "interval11" else (0.0,)

    def delta(self, x):
        if self.kind == "half":
            return x[..., -1]
        if self.kind == "full":
            return np.linalg.norm(x, axis=-1)
        if self.kind == "interval01":
            return x[..., 0]
        if self.kind == "interval11":
            return 1.0 - np.abs(x[..., 0])
        return np.ones(x.shape[:-1])

    def log_ratio(self, x, h, dx):
        """log(delta(x + h) / delta(x)) without cancellation for small h."""
        if self.kind == "half":
            return np.log1p(h[..., -1] / dx)
        if self.kind == "full":
            return 0.5 * np.log1p(np.sum(h * (2.0 * x + h), axis=-1) / (dx * dx))
        if self.kind == "interval01":
            return np.log1p(h[..., 0] / dx)
        if self.kind == "interval11":
            return np.log1p(-np.sign(x[..., 0]) * h[..., 0] / dx)
        return np.zeros(np.broadcast_shapes(x.shape, h.shape)[:-1])

    def delta_1d(self, y, c, e, dlo, dhi):
        """delta at y in the piece (c, e), using the exact offsets y - c and e - y at boundary points."""
        out = None
        for B in self.boundary_points:
            if np.isscalar(c) and c == B:
                cand = dlo
            elif np.isscalar(e) and e == B:
                cand = dhi
            else:
                cand = np.abs(y - B)
            out = cand if out is None else np.minimum(out, cand)
        return out


def make_setting(params: FractionalParams, regime: "Regime | str") -> Setting:
    """Setting of a Hardy regime (``fullspace`` / half-space variants) or of ``interval01``, ``interval11``, ``domain``."""
    p, sp, a, b = params.p, params.sp, params.alpha, params.beta
    key = regime.value if isinstance(regime, Regime) else str(regime)
    if key in ("interval01", "interval11"):
        return Setting(key, 1, p, sp, (sp - 1.0) / p, 0.0, 0.0, -sp)
    if key == "domain":
        return Setting("domain", params.d, p, sp, 0.0, 0.0, 0.0, 0.0)
    regime = Regime.parse(regime)
    if regime is Regime.FULL_SPACE:
        return Setting("full", params.d, p, sp, -params.gamma_full, -a, -b, -sp - a - b)
    return Setting("half", params.d, p, sp, -params.gamma_half, a, b, a + b - sp)


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(x))


def french_diff(vx, dv, k: float):
    """(vx + dv)^<k> - vx^<k>, accurate when dv is small relative to vx."""
    vy = vx + dv
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = dv / vx
        same = np.abs(t) < 0.5
        t = np.where(same, t, 0.0)
        rel = np.sign(vx) * np.abs(vx) ** k * np.expm1(k * np.log1p(t))
    direct = np.sign(vy) * np.abs(vy) ** k - np.sign(vx) * np.abs(vx) ** k
    return np.where(same, rel, direct)


def _pair_terms(st: Setting, u: TestFunction, x, h, dx, lr, want_rem: bool):
    """Energy and remainder integrands for x, y = x + h both in S (kernel included)."""
    r = np.linalg.norm(h, axis=-1)
    du = u.increment(x, h)
    ldx = np.log(dx)
    log_k = -(st.d + st.sp) * np.log(r)
    if st.a1 or st.b1:
        log_k = log_k + st.a1 * ldx + st.b1 * (ldx + lr)
    E = np.exp(st.p * _log(du) + log_k)
    if not want_rem:
        return E, None
    ux = u(x)
    lwx = st.kappa * ldx
    vx = ux * np.exp(-lwx)
    t = st.kappa * lr  # log(w(y) / w(x))
    dv = du * np.exp(-lwx - t) + vx * np.expm1(-t)
    df = french_diff(vx, dv, 0.5 * st.p)
    logW = st.p * lwx + np.minimum(t, 0.0) + (st.p - 1.0) * np.maximum(t, 0.0)
    R = np.exp(2.0 * _log(df) + logW + log_k)
    return E, R


def _exterior_terms(st: Setting, u: TestFunction, x, r, dx, dy, want_rem: bool):
    """Integrands for x in S, y outside S at distance r: both orderings of the pair."""
    ux = u(x)
    ldx, ldy = np.log(dx), np.log(dy)
    lr = -(st.d + st.sp) * np.log(r)
    k_xy = lr + st.a1 * ldx + st.b1 * ldy
    k_yx = lr + st.a1 * ldy + st.b1 * ldx
    lu = st.p * _log(ux)
    E = np.exp(lu + k_xy) + np.exp(lu + k_yx)
    if not want_rem:
        return E, None
    t = st.kappa * (ldy - ldx)
    # |v(x)|^p W(x, y) = |u(x)|^p w(x)^-p W = |u(x)|^p min(1, e^t) max(1, e^t)^(p-1)
    lw = lu + np.minimum(t, 0.0) + (st.p - 1.0) * np.maximum(t, 0.0)
    R = np.exp(lw + k_xy) + np.exp(lw + k_yx)
    return E, R


def _result(values, prev, evals, spec, method, level, min_level):
    err = abs(values - prev) if prev is not None else math.inf
    ok = prev is not None and level >= min_level and err <= spec.tol(values)
    return IntegralResult(float(values), float(err), evals, bool(ok), method)


# ---------------------------------------------------------------------------
# d = 1: tensor tanh-sinh with the support split at x, at the level points of
# u (kinks of |u(x) - u(y)|^p) and at the nodal points (kinks of v^<p/2>)


def _offsets_from(c, x, xlo, xhi, xa, xb, first):
    """c - x for x = xlo + xa (first half) or xhi - xb, exact when c is xlo or xhi."""
    return np.where(first, (c - xlo) - xa, (c - xhi) + xb)


# outer nodes only need to reach where the bump is negligible
_OUTER_TMAX = 3.2


def _line_pass(st, u, xlo, xhi, slo, shi, exterior, want_rem, level, chunk_elems=400_000):
    # the inner integrals are not smooth in x where a level point meets x
    # (critical points of u) or where v changes sign
    cuts = sorted({z for z in u.critical_points_1d() + u.nodal_points_1d() if xlo < z < xhi})
    ends = [xlo] + cuts + [xhi]
    da, db, w, _ = de_rule(level)
    rows = max(1, chunk_elems // da.size)
    E = R = 0.0
    n_eval = 0
    for a, b in zip(ends[:-1], ends[1:]):
        x, xa, xb, wx, _ = de_nodes(a, b, level, _OUTER_TMAX)
        for i in range(0, x.size, rows):
            sl = slice(i, i + rows)
            e, r, n = _line_chunk(st, u, x[sl], xa[sl], xb[sl], a, b, slo, shi, exterior, want_rem, da, db, w)
            E += float(np.sum(wx[sl] * e))
            R += float(np.sum(wx[sl] * r))
            n_eval += n
    return E, R, n_eval


def _accumulate(acc, F, wt):
    with np.errstate(invalid="ignore", over="ignore"):
        contrib = F * wt
    acc += np.sum(np.where((wt > 0) & np.isfinite(contrib), contrib, 0.0), axis=-1)


def _line_chunk(st, u, x, xa, xb, xlo, xhi, slo, shi, exterior, want_rem, da, db, w):
    first_x = xa <= xb
    fa = da <= 0.5
    X = x[:, None]
    dx = st.delta_1d(x, xlo, xhi, xa, xb)[:, None]
    # pair pieces: sorted break points per row, with the row's own x flagged
    cols = [np.full_like(x, slo), np.full_like(x, shi), x]
    lvl = u.level_points_1d(x)
    for j in range(lvl.shape[1]):
        cols.append(np.where(np.isfinite(lvl[:, j]), np.clip(lvl[:, j], slo, shi), x))
    for z in u.nodal_points_1d():
        cols.append(np.full_like(x, min(max(z, slo), shi)))
    P = np.stack(cols, axis=1)
    is_x = np.zeros_like(P, dtype=bool)
    is_x[:, 2] = True
    order = np.argsort(P, axis=1, kind="stable")
    P = np.take_along_axis(P, order, axis=1)
    is_x = np.take_along_axis(is_x, order, axis=1)
    # c - x per column, exact for x itself and for the ends of the x-interval
    CX = np.where(is_x, 0.0, _offsets_from(P, X, xlo, xhi, xa[:, None], xb[:, None], first_x[:, None]))
    accE = np.zeros(x.size)
    accR = np.zeros(x.size)
    for j in range(P.shape[1] - 1):
        L = np.maximum(CX[:, j + 1] - CX[:, j], 0.0)[:, None]
        ya, yb = L * da, L * db
        h = np.where(fa, CX[:, j:j + 1] + ya, CX[:, j + 1:j + 2] - yb)
        h = np.where(h == 0.0, np.where(fa, 1e-300, -1e-300), h)
        lr = st.log_ratio(X[..., None], h[..., None], dx)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            E, R = _pair_terms(st, u, X[..., None], h[..., None], dx, lr, want_rem)
        wt = L * w
        _accumulate(accE, E, wt)
        if want_rem:
            _accumulate(accR, R, wt)
    for c, e in exterior:
        c = c(X) if callable(c) else c
        e = e(X) if callable(e) else e
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if np.isscalar(e) and math.isinf(e):
                D = _offsets_from(c, X, xlo, xhi, xa[:, None], xb[:, None], first_x[:, None])
                r = D / da
                dy = st.delta_1d(X + r, c, e, D * db / da, np.inf)
                wt = D / da ** 2 * w
            elif np.isscalar(c) and math.isinf(c):
                D = -_offsets_from(e, X, xlo, xhi, xa[:, None], xb[:, None], first_x[:, None])
                r = D / da
                dy = st.delta_1d(X - r, c, e, np.inf, D * db / da)
                wt = D / da ** 2 * w
            else:
                L = e - c
                ya, yb = L * da, L * db
                y = np.where(fa, c + ya, e - yb)
                cx = _offsets_from(c, X, xlo, xhi, xa[:, None], xb[:, None], first_x[:, None])
                ex = _offsets_from(e, X, xlo, xhi, xa[:, None], xb[:, None], first_x[:, None])
                r = np.abs(np.where(fa, cx + ya, ex - yb))
                dy = st.delta_1d(y, c, e, ya, yb)
                wt = L * w * np.ones_like(r)
            E, R = _exterior_terms(st, u, X[..., None], r, dx, dy, want_rem)
        _accumulate(accE, E, wt)
        if want_rem:
            _accumulate(accR, R, wt)
    n_eval = x.size * da.size * (P.shape[1] - 1 + len(exterior))
    return accE, accR, n_eval


def _line_terms(st, u, xlo, xhi, slo, shi, exterior, want_rem, spec, min_level=4, max_level=9):
    """(energy-type, remainder-type) double integrals over x in (xlo, xhi) for d = 1.

    Pairs with y in (slo, shi) use the increment form; ``exterior`` lists the
    y-intervals outside the support (possibly infinite, or callables of the
    outer nodes for row-dependent ends), counted for both orderings of the pair.
    """
    prevE = prevR = None
    evals = 0
    method = Method.DOUBLE_EXPONENTIAL.value
    for level in range(min_level - 1, max_level + 1):
        E, R, n = _line_pass(st, u, xlo, xhi, slo, shi, exterior, want_rem, level)
        evals += n
        rE = _result(E, prevE, evals, spec, method, level, min_level)
        rR = _result(R, prevR, evals, spec, method, level, min_level)
        if rE.converged and (rR.converged or not want_rem):
            break
        prevE, prevR = E, R
    return rE, (rR if want_rem else None)


# ---------------------------------------------------------------------------
# d = 2: outer polar rule on a disk containing supp u, inner polar integral
# about x with angular breaks where the domain's exit distance has kinks and
# radial breaks at the support exit, at the reflected circle of a radial
# bump (a kink of |u(x) - u(y)|^p), at the closest approach to the origin and
# at the domain exit


def _disk_rule(center, R, n_r, sectors=None, n_t=None):
    """Polar product rule on a disk: Gauss in r, trapezoid in theta, or Gauss on each sector."""
    n_t = n_t or n_r // 2
    g, gw = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * R * (g + 1.0)
    wr = 0.5 * R * gw * r
    if sectors is None:
        th = 2.0 * math.pi * (np.arange(n_t) + 0.5) / n_t
        wt = np.full(n_t, 2.0 * math.pi / n_t)
    else:
        gt, gtw = np.polynomial.legendre.leggauss(max(n_t // len(sectors), 4))
        th = np.concatenate([a + 0.5 * (b - a) * (gt + 1.0) for a, b in sectors])
        wt = np.concatenate([0.5 * (b - a) * gtw for a, b in sectors])
    X = np.stack([center[0] + r[:, None] * np.cos(th), center[1] + r[:, None] * np.sin(th)], axis=-1)
    W = wr[:, None] * wt
    return X.reshape(-1, 2), W.reshape(-1)


def _outer_sectors(u: TestFunction):
    """Half-disks on either side of the nodal diameter of an odd ball bump."""
    if u.is_odd and isinstance(u.support, BallSupport):
        return [(-0.5 * math.pi, 0.5 * math.pi), (0.5 * math.pi, 1.5 * math.pi)]
    return None


def _perp_breaks(v):
    """Directions perpendicular to the vectors v, as angles in [0, 2 pi)."""
    a = np.arctan2(v[:, 1], v[:, 0])
    return [np.mod(a + 0.5 * math.pi, 2.0 * math.pi), np.mod(a - 0.5 * math.pi, 2.0 * math.pi)]


def _angular_breaks(st, X, domain, radial_center=None):
    """Per-row sorted angles in [0, 2 pi] where the inner radial integrand changes form."""
    n = X.shape[0]
    cols = [np.zeros(n), np.full(n, 2.0 * math.pi)]
    if st.kind == "half":
        cols.append(np.full(n, math.pi))
    elif st.kind == "full":
        # the ray passes closest to the origin at t* = -x.e, which is positive on one side
        cols.append(np.mod(np.arctan2(-X[:, 1], -X[:, 0]), 2.0 * math.pi))
        cols += _perp_breaks(X)
    else:
        cols += list(domain.angular_breaks(X).T)
    if radial_center is not None:
        # the reflected circle of a radial bump shrinks to x at these directions
        cols += _perp_breaks(X - radial_center)
    return np.sort(np.stack(cols, axis=1), axis=1)


def _disk_pass(st, u, domain, want_rem, n_r, n_t, ang_level, rad_level, chunk=6):
    c, Rs = u.support.bounding_ball()
    X_all, W_all = _disk_rule(c, Rs, n_r, _outer_sectors(u), n_t)
    dA, dB, wA, _ = de_rule(ang_level, 4.0)
    da, db, w, _ = de_rule(rad_level)
    fa = da <= 0.5
    radial_center = np.array(u.support.center) if (
        isinstance(u.support, BallSupport) and u.profile == "even") else None
    totE = totR = 0.0
    evals = 0
    for start in range(0, X_all.shape[0], chunk):
        X = X_all[start:start + chunk]
        WX = W_all[start:start + chunk]
        dxs = st.delta(X)
        ang = _angular_breaks(st, X, domain, radial_center)
        accE = np.zeros(X.shape[0])
        accR = np.zeros(X.shape[0])
        for j in range(ang.shape[1] - 1):
            lo, hi = ang[:, j:j + 1], ang[:, j + 1:j + 2]
            span = hi - lo
            th = np.where(dA <= 0.5, lo + span * dA, hi - span * dB)
            wth = span * wA
            E2 = np.stack([np.cos(th), np.sin(th)], axis=-1)  # (n, m, 2)
            z = X[:, None, :] - c
            b = np.sum(z * E2, axis=-1)
            cc = np.sum(z * z, axis=-1) - Rs ** 2
            disc = np.sqrt(np.maximum(b * b - cc, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                rho_S = np.where(b > 0, -cc / (b + disc), disc - b)
            if radial_center is not None:
                rstar = np.clip(-2.0 * np.sum((X[:, None, :] - radial_center) * E2, axis=-1), 0.0, rho_S)
            else:
                rstar = rho_S
            pieces = [(np.zeros_like(rho_S), rstar, "pair"), (rstar, rho_S, "pair")]
            tstar = None
            if st.kind == "half":
                with np.errstate(divide="ignore"):
                    rho_O = np.where(E2[..., 1] < 0, X[:, None, 1] / np.where(E2[..., 1] < 0, -E2[..., 1], 1.0), np.inf)
                pieces.append((rho_S, rho_O, "ext"))
            elif st.kind == "full":
                tstar = -np.sum(X[:, None, :] * E2, axis=-1)
                m1 = np.maximum(tstar, rho_S)
                # |y| = |x| again at 2 t*, a kink of the remainder's coupling weight
                m2 = np.maximum(2.0 * tstar, m1)
                pieces += [(rho_S, m1, "ext"), (m1, m2, "ext"), (m2, np.full_like(m1, np.inf), "ext")]
            else:
                rho_O = domain.exit_distance(X[:, None, :], E2)
                pieces.append((rho_S, rho_O, "ext"))
            Xb = X[:, None, None, :]
            Eb = E2[:, :, None, :]
            dxb = dxs[:, None, None]
            inner = np.zeros(th.shape)
            innerR = np.zeros(th.shape)
            for r0, r1, kind in pieces:
                r0b, r1b = r0[..., None], r1[..., None]
                inf = np.isinf(r1b)
                seg = np.where(inf, 0.0, np.maximum(r1b - r0b, 0.0))
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    rho = np.where(inf, r0b / da, np.where(fa, r0b + seg * da, r1b - seg * db))
                    dlo = np.where(inf, r0b * db / da, seg * da)
                    dhi = np.where(inf, np.inf, seg * db)
                    jac = np.where(inf, r0b / da ** 2 * w, seg * w) * rho
                    if kind == "pair":
                        h = rho[..., None] * Eb
                        lr = st.log_ratio(Xb, h, dxb)
                        E, R = _pair_terms(st, u, Xb, h, dxb, lr, want_rem)
                    else:
                        if st.kind == "half":
                            ed = Eb[..., 1]
                            dy = np.where(ed < 0, dhi * -ed, Xb[..., 1] + rho * ed)
                        elif st.kind == "full":
                            perp = Xb[..., 0] * Eb[..., 1] - Xb[..., 1] * Eb[..., 0]
                            ts = tstar[..., None]
                            at_t = (r1b == ts) & ~inf
                            starts_t = r0b == ts
                            rt = np.where(at_t, -dhi, np.where(starts_t, dlo, rho - ts))
                            dy = np.sqrt(rt * rt + perp * perp)
                        else:
                            dy = np.ones_like(rho)
                        E, R = _exterior_terms(st, u, Xb, rho, dxb, dy, want_rem)
                _accumulate(inner, E, jac)
                if want_rem:
                    _accumulate(innerR, R, jac)
                evals += rho.size
            accE += np.sum(wth * inner, axis=-1)
            if want_rem:
                accR += np.sum(wth * innerR, axis=-1)
        totE += float(np.sum(WX * accE))
        totR += float(np.sum(WX * accR))
    return totE, totR, evals


# (outer radial nodes, outer angular nodes, angular DE level, radial DE level);
# the outer rule dominates the error, so it is refined before the inner levels
_DISK_PASSES = ((16, 8, 2, 2), (24, 12, 3, 3), (32, 16, 3, 3), (32, 16, 4, 4))


def _disk_terms(st, u, domain, want_rem, spec, passes=_DISK_PASSES):
    prevE = prevR = None
    evals = 0
    method = Method.DOUBLE_EXPONENTIAL.value
    for level, rule in enumerate(passes, start=1):
        E, R, n = _disk_pass(st, u, domain, want_rem, *rule)
        evals += n
        rE = _result(E, prevE, evals, spec, method, level, 2)
        rR = _result(R, prevR, evals, spec, method, level, 2)
        if rE.converged and (rR.converged or not want_rem):
            break
        prevE, prevR = E, R
    return rE, (rR if want_rem else None)


# ---------------------------------------------------------------------------
# Monte Carlo (d >= 3, or on request)


def _mc_terms(st, u, domain, want_rem, spec):
    rng = np.random.default_rng(spec.seed)
    n = spec.mc_budget
    d = st.d
    c, Rs = u.support.bounding_ball()
    c = np.asarray(c, dtype=float)
    vol = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * Rs ** d
    a = max(st.p - st.sp, 0.05)  # density ~ rho^(a-1) near the diagonal
    b = 0.5 * st.sp  # Pareto tail, slower than the kernel's decay
    R0 = 2.0 * Rs
    area = surface_area(d)
    valsE, valsR = [], []
    for start in range(0, n, 32768):
        k = min(32768, n - start)
        g = rng.standard_normal((k, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        x = c + Rs * rng.random(k)[:, None] ** (1.0 / d) * g
        e = uniform_directions(rng, k, d)
        near = rng.random(k) < 0.5
        U = rng.random(k)
        rho = np.where(near, R0 * U ** (1.0 / a), R0 * (1.0 - U) ** (-1.0 / b))
        dens_r = 0.5 * np.where(rho < R0, a * rho ** (a - 1.0) / R0 ** a, b * R0 ** b * rho ** (-b - 1.0))
        dens = dens_r / (area * rho ** (d - 1))
        h = rho[:, None] * e
        y = x + h
        dx = st.delta(x)
        in_S = np.linalg.norm(y - c, axis=1) < Rs
        if st.kind == "half":
            in_O = y[:, -1] > 0
        elif st.kind == "full":
            in_O = np.ones(k, dtype=bool)
        else:
            in_O = domain.contains(y)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lr = st.log_ratio(x, h, dx)
            Ep, Rp = _pair_terms(st, u, x, h, dx, lr, want_rem)
            dy = np.where(in_O, st.delta(np.where(in_O[:, None], y, x)), 1.0)
            Ee, Re = _exterior_terms(st, u, x, rho, dx, dy, want_rem)
        fE = np.where(in_S, Ep, np.where(in_O, Ee, 0.0))
        valsE.append(vol * np.nan_to_num(fE) / dens)
        if want_rem:
            fR = np.where(in_S, Rp, np.where(in_O, Re, 0.0))
            valsR.append(vol * np.nan_to_num(fR) / dens)

    def pack(vals):
        v = np.concatenate(vals)
        mean = float(np.mean(v))
        se = float(np.std(v, ddof=1)) / math.sqrt(v.size)
        ok = se <= spec.with_method(Method.MONTE_CARLO).tol(mean)
        return IntegralResult(mean, se, v.size, ok, Method.MONTE_CARLO.value, True)

    return pack(valsE), (pack(valsR) if want_rem else None)


# ---------------------------------------------------------------------------
# single integrals over the support


def _support_integral(u: TestFunction, st: Setting, g, spec: QuadratureSpec, bounds=None, point_weight=None) -> IntegralResult:
    """Integral of g(u(x), delta(x)) over supp u (intersected with ``bounds`` for d = 1).

    ``point_weight(X)``, when given, multiplies the integrand (d >= 2 only).
    """
    if u.amplitude == 0.0:
        return IntegralResult.exact(0.0)
    pw = point_weight or (lambda X: 1.0)
    if st.d == 1:
        lo, hi = u.support.interval()
        if bounds is not None:
            lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
        # |u|^p has a kink where u changes sign
        ends = [lo] + [z for z in u.nodal_points_1d() if lo < z < hi] + [hi]
        parts = []
        for a, b in zip(ends[:-1], ends[1:]):
            f = lambda x, xa, xb, a=a, b=b: g(u(x), st.delta_1d(x, a, b, xa, xb))
            parts.append(integrate_1d(f, a, b, (), spec, offsets=True))
        return total(parts)
    if st.d == 2 and spec.method is not Method.MONTE_CARLO:
        c, R = u.support.bounding_ball()
        prev = None
        for level in range(3, 9):
            X, W = _disk_rule(c, R, 8 * level, _outer_sectors(u))
            val = float(np.sum(W * g(u(X), st.delta(X)) * pw(X)))
            if prev is not None:
                err = abs(val - prev)
                if err <= spec.tol(val):
                    return IntegralResult(val, err, X.shape[0], True, Method.DOUBLE_EXPONENTIAL.value)
            prev = val
        return IntegralResult(val, err, X.shape[0], False, Method.DOUBLE_EXPONENTIAL.value)
    rng = np.random.default_rng(spec.seed)
    c, R = u.support.bounding_ball()
    d = st.d
    n = spec.mc_budget
    gs = rng.standard_normal((n, d))
    gs /= np.linalg.norm(gs, axis=1, keepdims=True)
    X = np.asarray(c) + R * rng.random(n)[:, None] ** (1.0 / d) * gs
    vol = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * R ** d
    v = vol * g(u(X), st.delta(X)) * pw(X)
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1)) / math.sqrt(n)
    return IntegralResult(mean, se, n, se <= spec.with_method(Method.MONTE_CARLO).tol(mean), Method.MONTE_CARLO.value, True)


# ---------------------------------------------------------------------------
# public terms


def _regime_domain(st: Setting):
    return None


def _line_layout(st: Setting, u: TestFunction):
    """(x-interval, pair interval, exterior pieces) for the whole-domain terms in d = 1."""
    lo, hi = u.support.interval()
    if st.kind == "half":
        return (lo, hi), (lo, hi), [(0.0, lo), (hi, math.inf)]
    if st.kind == "full":
        # w(y) = w(x) at y = -x, a kink of the remainder's coupling weight
        refl = lambda X: -X
        if lo > 0:
            return (lo, hi), (lo, hi), [(-math.inf, refl), (refl, 0.0), (0.0, lo), (hi, math.inf)]
        return (lo, hi), (lo, hi), [(-math.inf, lo), (hi, 0.0), (0.0, refl), (refl, math.inf)]
    raise ValueError(f"no whole-domain layout for {st.kind}")


@lru_cache(maxsize=256)
def _terms(u: TestFunction, params: FractionalParams, regime: Regime, spec: QuadratureSpec, want_rem: bool):
    st = make_setting(params, regime)
    if u.amplitude == 0.0:
        zero = IntegralResult.exact(0.0)
        return zero, zero
    if u.dim != params.d:
        raise ValueError(f"test function has d={u.dim}, params have d={params.d}")
    check_support(u, regime)
    if spec.method is Method.MONTE_CARLO or st.d >= 3:
        return _mc_terms(st, u, None, want_rem, spec)
    if st.d == 1:
        (xlo, xhi), (slo, shi), ext = _line_layout(st, u)
        return _line_terms(st, u, xlo, xhi, slo, shi, ext, want_rem, spec)
    rE, rR = _disk_terms(st, u, None, want_rem, spec)
    if rE.converged and (rR is None or rR.converged):
        return rE, rR
    # sign-changing bumps kink along the nodal line, which the product rule
    # does not resolve; fall back to a statistical estimate
    return _mc_terms(st, u, None, want_rem, spec)


def _default_spec(spec, d=1):
    """1e-7 relative on the line; the plane's product rules stop at 1e-5."""
    return spec or QuadratureSpec(rel_tol=1e-7 if d == 1 else 1e-5, abs_tol=1e-13)


def energy(u: TestFunction, params: FractionalParams, regime: "Regime | str", spec: QuadratureSpec | None = None) -> IntegralResult:
    """E[u] = int int |u(x) - u(y)|^p k(x, y) dy dx over the regime's domain.

    k(x, y) = |x - y|^(-d-sp) times |x|^-alpha |y|^-beta (full space) or
    x_d^alpha y_d^beta (half-space).
    """
    regime = Regime.parse(regime)
    return _terms(u, params, regime, _default_spec(spec, params.d), False)[0]


def remainder(u: TestFunction, params: FractionalParams, regime: "Regime | str", spec: QuadratureSpec | None = None) -> IntegralResult:
    """int int (v(x)^<p/2> - v(y)^<p/2>)^2 W(x, y) k(x, y) dy dx with v = u / w and W the coupling of w."""
    regime = Regime.parse(regime)
    return _terms(u, params, regime, _default_spec(spec, params.d), True)[1]


def energy_and_remainder(u, params, regime, spec=None):
    regime = Regime.parse(regime)
    return _terms(u, params, regime, _default_spec(spec, params.d), True)


def hardy_term(u: TestFunction, params: FractionalParams, regime: "Regime | str", spec: QuadratureSpec | None = None) -> IntegralResult:
    """int |u|^p |x|^(-sp-alpha-beta) (full space) or int |u|^p x_d^(alpha+beta-sp) (half-space)."""
    regime = Regime.parse(regime)
    spec = _default_spec(spec, params.d)
    if u.amplitude != 0.0:
        check_support(u, regime)
    st = make_setting(params, regime)
    p, e = params.p, st.hardy_exp
    return _support_integral(u, st, lambda ux, dx: np.abs(ux) ** p * dx ** e, spec)


def sobolev_term(u: TestFunction, params: FractionalParams, spec: QuadratureSpec | None = None, weighted: bool = True) -> IntegralResult:
    """(int |u|^q x_d^((q/p)(alpha+beta)) dx)^(p/q) with q = dp/(d - sp); ``weighted=False`` drops the weight."""
    spec = _default_spec(spec, params.d)
    q = params.q
    p = params.p
    expo = q / p * (params.alpha + params.beta) if weighted else 0.0
    st = make_setting(params, Regime.HALF_SPACE)
    inner = _support_integral(u, st, lambda ux, dx: np.abs(ux) ** q * dx ** expo, spec)
    if inner.value <= 0:
        return IntegralResult(0.0, 0.0, inner.evaluations, inner.converged, inner.method_used, inner.statistical)
    value = inner.value ** (p / q)
    err = p / q * inner.value ** (p / q - 1.0) * inner.error_estimate
    return IntegralResult(value, err, inner.evaluations, inner.converged, inner.method_used, inner.statistical)


# ---------------------------------------------------------------------------
# principal-value potential


DEFAULT_EPS = tuple(2.0 ** -j for j in range(3, 13))


@dataclass(frozen=True)
class PotentialValue:
    value: float
    error: float
    truncated: tuple
    eps: tuple
    exponent: float

    def __float__(self):
        return self.value


def richardson(eps: Sequence[float], values: Sequence[float], exponents: Sequence[float]):
    """Extrapolate values(eps) -> eps = 0 assuming an error expansion in eps**exponents[k].

    Returns (limit, error) where error is the change made by the last column.
    """
    T = [list(map(float, values))]
    for k, ex in enumerate(exponents, start=1):
        prev = T[-1]
        if len(prev) < 2:
            break
        col = []
        for j in range(1, len(prev)):
            ratio = (eps[j - 1 + k - 1] / eps[j + k - 1]) ** ex
            col.append(prev[j] + (prev[j] - prev[j - 1]) / (ratio - 1.0))
        T.append(col)
    best = T[-1][-1]
    err = abs(T[-1][-1] - T[-2][-1]) if len(T) > 1 else math.inf
    return best, err


def predicted_potential(x, params: FractionalParams, regime: "Regime | str", spec: QuadratureSpec | None = None) -> float:
    """C |x|^(-sp-alpha-beta) (full space) or D x_d^(alpha+beta-sp) (half-space)."""
    regime = Regime.parse(regime)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if regime is Regime.FULL_SPACE:
        return constant_C(params, spec).value * float(np.linalg.norm(x)) ** (-params.sp - params.alpha - params.beta)
    return constant_D(params, spec).value * float(x[-1]) ** (params.alpha + params.beta - params.sp)


def _pv_line(x: float, params: FractionalParams, full: bool, eps: Sequence[float], spec: QuadratureSpec):
    """Truncated potentials on the half-line (full=False) or punctured line at x > 0, divided by 2 w(x)^(p-1)."""
    p, sp, a, b = params.p, params.sp, params.alpha, params.beta
    kappa = -params.gamma_full if full else -params.gamma_half
    sa, sb = (-a, -b) if full else (a, b)
    e_pow = p - 1.0

    def term(lt, lk):
        # (1 - t^kappa)^<p-1> times the symmetrised weight 0.5 (t^sa + t^sb) times exp(lk), t = y / x
        with np.errstate(divide="ignore", invalid="ignore"):
            z = kappa * lt
            lg = log_abs_expm1(z)
            lrho = np.logaddexp(sa * lt, sb * lt) - math.log(2.0)
            return -np.sign(z) * np.exp(e_pow * lg + lrho + lk)

    # scale to x = 1: y = x t gives a factor x^(-sp) x^(sa + sb)
    scale = x ** (-sp + sa + sb)
    grow = max(kappa * e_pow, 0.0)
    at0 = min(sa, sb) + min(kappa * e_pow, 0.0)
    sing_ab = (SingularityDescriptor(Location.LEFT, max(at0, -0.999)),)
    tail = (SingularityDescriptor(Location.LEFT, max(sp - 1.0 - max(sa, sb) - grow, -0.999)),)
    # t in (0, 1/2)
    fA = lambda t, ta, tb: term(np.log(ta), -(1.0 + sp) * np.log1p(-t))
    # t in (3/2, inf) via t = 1.5 / tau
    fC = lambda tau, ta, tb: term(math.log(1.5) - np.log(ta), math.log(1.5) + (sp - 1.0) * np.log(ta) - (1.0 + sp) * np.log(1.5 - tau))
    parts = [integrate_1d(fA, 0.0, 0.5, sing_ab, spec, offsets=True), integrate_1d(fC, 0.0, 1.0, tail, spec, offsets=True)]
    if full:
        # y = -x t: the numerator sees |y| / x = t and the kernel is (1 + t)^(-1-sp)
        fN1 = lambda t, ta, tb: term(np.log(ta), -(1.0 + sp) * np.log1p(t))
        fN2 = lambda tau, ta, tb: term(-np.log(ta), (sp - 1.0) * np.log(ta) - (1.0 + sp) * np.log1p(tau))
        parts += [integrate_1d(fN1, 0.0, 1.0, sing_ab, spec, offsets=True), integrate_1d(fN2, 0.0, 1.0, tail, spec, offsets=True)]

    def paired(h, ha, hb):
        lk = -(1.0 + sp) * np.log(h)
        return term(np.log1p(h), lk) + term(np.log1p(-h), lk)

    base = sum(r.value for r in parts)
    err = sum(r.error_estimate for r in parts)
    ok = all(r.converged for r in parts)
    eps_s = [e / x for e in eps]
    values = []
    B = integrate_1d(paired, eps_s[0], 0.5, (), spec, offsets=True)
    acc, acc_err, ok = B.value, B.error_estimate, ok and B.converged
    for j, e in enumerate(eps_s):
        if j > 0:
            piece = integrate_1d(paired, e, eps_s[j - 1], (), spec, offsets=True)
            acc += piece.value
            acc_err += piece.error_estimate
            ok = ok and piece.converged
        values.append(2.0 * scale * (base + acc))
    return values, 2.0 * scale * (err + acc_err), ok


def potential_pv_report(
    x,
    params: FractionalParams,
    regime: "Regime | str",
    eps_sequence: Sequence[float] | None = None,
    spec: QuadratureSpec | None = None,
) -> PotentialValue:
    """V(x) = lim 2 w(x)^(1-p) int_{trunc} (w(x) - w(y))^<p-1> k(x, y) dy with Richardson extrapolation.

    The kernel weight enters through its symmetric part, which is all the
    energy sees.  Truncation is |x_d - y_d| > eps around x only; in the
    full space the neighbourhood of -x is integrable and is integrated
    directly, since excluding it changes nothing in the limit and would
    add eps^(p+1) terms to the expansion.  The truncation error behaves like
    eps^(p - sp) with corrections in eps^(p - sp + 2k), and those are the
    exponents used for extrapolation.
    """
    regime = Regime.parse(regime)
    spec = spec or QuadratureSpec(rel_tol=1e-11, abs_tol=1e-14)
    eps = tuple(sorted(eps_sequence or DEFAULT_EPS, reverse=True))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    full = regime is Regime.FULL_SPACE
    validate(params, Regime.FULL_SPACE if full else Regime.HALF_SPACE, allow_boundary=True)
    if full:
        if params.d != 1:
            raise NotImplementedError("the full-space potential is implemented for d = 1")
        t = float(abs(x[0]))
        if t == 0.0:
            raise ValueError("x must avoid the origin")
        factor = 1.0
    else:
        t = float(x[-1])
        if t <= 0.0:
            raise ValueError("x must satisfy x_d > 0")
        # integrating out y' turns |x - y|^(-d-sp) into this multiple of |x_d - y_d|^(-1-sp)
        factor = d_prefactor(params.d, params.sp)
    eps = tuple(e for e in eps if e < 0.5 * t)
    if len(eps) < 2:
        raise ValueError("eps_sequence needs at least two values below x/2")
    values, qerr, ok = _pv_line(t, params, full, eps, spec)
    values = [factor * v for v in values]
    a = params.p - params.sp
    limit, rerr = richardson(eps, values, [a + 2 * k for k in range(len(eps) - 1)])
    if not (ok and math.isfinite(limit)):
        raise ArithmeticError("principal-value quadrature did not converge")
    return PotentialValue(limit, rerr + factor * qerr, tuple(values), eps, a)


def potential_pv(x, params, regime, eps_sequence=None, spec=None) -> float:
    return potential_pv_report(x, params, regime, eps_sequence, spec).value


# ---------------------------------------------------------------------------
# verification reports


STATUSES = ("pass", "violation", "non-converged", "condition-failure", "constant-probe")


def _ir_dict(r: Optional[IntegralResult]):
    if r is None:
        return None
    return {"value": r.value, "error": r.error_estimate, "converged": r.converged,
            "method": r.method_used, "statistical": r.statistical}


@dataclass
class VerificationReport:
    """All terms of one inequality instance.

    ``slack`` is energy - constant * hardy - remainder_constant * remainder
    (with the HSM and interval variants documented by their verifiers) and
    ``passed`` is slack >= -tol_total.
    """

    params: FractionalParams
    regime: str
    energy: Optional[IntegralResult]
    hardy_term: Optional[IntegralResult]
    constant_used: float
    remainder: Optional[IntegralResult]
    remainder_constant: float
    sobolev_term: Optional[IntegralResult] = None
    slack: float = 0.0
    tol_total: float = 0.0
    passed: bool = True
    status: str = "pass"
    extras: dict = field(default_factory=dict)

    @property
    def statistical(self) -> bool:
        terms = (self.energy, self.hardy_term, self.remainder)
        return any(t is not None and t.statistical for t in terms)

    @property
    def converged(self) -> bool:
        terms = (self.energy, self.hardy_term, self.remainder, self.sobolev_term)
        return all(t is None or t.converged for t in terms)

    def as_dict(self) -> dict:
        return {
            "params": {k: getattr(self.params, k) for k in ("d", "s", "p", "alpha", "beta")},
            "regime": self.regime,
            "terms": {
                "energy": _ir_dict(self.energy),
                "hardy": _ir_dict(self.hardy_term),
                "remainder": _ir_dict(self.remainder),
                "sobolev": _ir_dict(self.sobolev_term),
            },
            "constants": {"C_or_D": self.constant_used, "rem_const": self.remainder_constant,
                          **{k: v for k, v in self.extras.items() if k in ("Cp", "A")}},
            "slack": self.slack,
            "tol_total": self.tol_total,
            "passed": self.passed,
            "status": self.status,
            "extras": {k: v for k, v in self.extras.items() if k not in ("Cp", "A")},
        }


def tolerance_total(energy, hardy, K, K_err, remainder, c_rem) -> float:
    """3 (err E + K err H + H err K + c err R) + 1e-12 scale."""
    eE = energy.error_estimate if energy else 0.0
    eH = hardy.error_estimate if hardy else 0.0
    vH = hardy.value if hardy else 0.0
    eR = remainder.error_estimate if remainder else 0.0
    vE = energy.value if energy else 0.0
    vR = remainder.value if remainder else 0.0
    scale = abs(vE) + abs(K * vH) + abs(c_rem * vR)
    return 3.0 * (eE + K * eH + abs(vH) * K_err + c_rem * eR) + 1e-12 * scale


def _status(slack, tol, converged, probe=False):
    passed = slack >= -tol
    if probe:
        return passed, "constant-probe"
    if not converged:
        return passed, "non-converged"
    return passed, ("pass" if passed else "violation")


def _sharp_constant(params, regime, spec) -> SharpConstant:
    cspec = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-300) if spec.method is not Method.ADAPTIVE_SUBDIVISION else \
        QuadratureSpec(method=Method.ADAPTIVE_SUBDIVISION, rel_tol=1e-12, abs_tol=1e-300)
    return constant_C(params, cspec) if regime is Regime.FULL_SPACE else constant_D(params, cspec)


def verify_hardy(
    u: TestFunction,
    params: FractionalParams,
    regime: "Regime | str",
    spec: QuadratureSpec | None = None,
    remainder_factor: float = 1.0,
    remainder_constant: float | None = None,
) -> VerificationReport:
    """Check E[u] - K H[u] >= c R[u] with K the sharp constant of the regime.

    c is p - 1 for nonnegative u and C_p otherwise.  Passing
    ``remainder_factor`` != 1 (or an explicit ``remainder_constant``) turns
    the run into an exploratory "constant-probe" whose failure is expected.
    """
    regime = Regime.parse(regime)
    if regime not in (Regime.FULL_SPACE, Regime.HALF_SPACE):
        raise RegimeError(f"verify_hardy handles fullspace and halfspace, not {regime.value}")
    validate(params, regime)
    spec = _default_spec(spec, params.d)
    base_c = (params.p - 1.0) if u.nonnegative else constant_Cp(params.p)
    probe = remainder_factor != 1.0 or remainder_constant is not None
    c_rem = remainder_constant if remainder_constant is not None else base_c * remainder_factor
    K = _sharp_constant(params, regime, spec)
    E, R = energy_and_remainder(u, params, regime, spec)
    H = hardy_term(u, params, regime, spec)
    slack = E.value - K.value * H.value - c_rem * R.value
    tol = tolerance_total(E, H, K.value, K.error, R, c_rem)
    passed, status = _status(slack, tol, E.converged and H.converged and R.converged, probe)
    extras = {"Cp": constant_Cp(params.p), "test_function": u.as_dict(),
              "hardy_difference": E.value - K.value * H.value}
    if E.statistical or R.statistical:
        extras["statistical_pass"] = passed
    return VerificationReport(params, regime.value, E, H, K.value, R, c_rem, None, slack, tol, passed, status, extras)


def verify_hsm_halfspace(u: TestFunction, params: FractionalParams, spec: QuadratureSpec | None = None) -> VerificationReport:
    """Hardy-Sobolev-Maz'ya on the half-space in its checkable form.

    With delta = E[u] - D H[u] the report passes iff delta >= C_p R[u] - tol
    and R[u] >= -tol; the Sobolev term S[u] and delta / S[u] (a lower-bound
    witness for the unknown constant) are recorded.  When A_{alpha,beta,p}
    vanishes the instance is reported as a condition failure.
    """
    validate(params, Regime.HSM_HALF_SPACE)
    spec = _default_spec(spec, params.d)
    A = constant_A(params.p, params.alpha, params.beta)
    Cp = constant_Cp(params.p)
    D = _sharp_constant(params, Regime.HALF_SPACE, spec)
    if A <= 0.0:
        return VerificationReport(params, Regime.HSM_HALF_SPACE.value, None, None, D.value, None, Cp,
                                  None, 0.0, 0.0, False, "condition-failure",
                                  {"A": A, "Cp": Cp, "reason": "A_{alpha,beta,p} = 0"})
    E, R = energy_and_remainder(u, params, Regime.HALF_SPACE, spec)
    H = hardy_term(u, params, Regime.HALF_SPACE, spec)
    S = sobolev_term(u, params, spec)
    delta = E.value - D.value * H.value
    slack = delta - Cp * R.value
    tol = tolerance_total(E, H, D.value, D.error, R, Cp)
    ok = E.converged and H.converged and R.converged and S.converged
    passed = slack >= -tol and R.value >= -tol
    status = "pass" if passed else "violation"
    if not ok:
        status = "non-converged"
    extras = {"A": A, "Cp": Cp, "delta": delta, "test_function": u.as_dict(),
              "ratio_delta_sobolev": (delta / S.value) if S.value > 0 else None,
              "ratio_delta_A_sobolev": (delta / (A * S.value)) if S.value > 0 else None}
    return VerificationReport(params, Regime.HSM_HALF_SPACE.value, E, H, D.value, R, Cp, S, slack, tol,
                              passed, status, extras)


# ---------------------------------------------------------------------------
# interval inequalities: (0, 1) with distance x, (-1, 1) with distance 1 - |x|


def _check_endpoints(u: TestFunction, lo: float, hi: float):
    a, b = u.support.interval()
    if not (lo < a and b < hi):
        raise OutsideSupportError(f"test function must vanish near the endpoints of ({lo}, {hi}), support is ({a}, {b})")
    edge = np.array([lo, hi])
    if np.any(u(edge) != 0.0):
        raise OutsideSupportError("test function does not vanish at the endpoints")


def _interval_pieces(st, u, part, want_rem, spec):
    """Energy-type terms over part x part for part = (lo, hi) containing the window of supp u."""
    lo, hi = part
    a, b = u.support.interval()
    xa, xb = max(a, lo), min(b, hi)
    ext = []
    if lo < xa:
        ext.append((lo, xa))
    if xb < hi:
        ext.append((xb, hi))
    if xa >= xb:
        zero = IntegralResult.exact(0.0)
        return zero, zero
    return _line_terms(st, u, xa, xb, xa, xb, ext, want_rem, spec)


def interval_cross_term(u: TestFunction, params: FractionalParams, spec: QuadratureSpec | None = None) -> IntegralResult:
    """int_{-1}^0 int_0^1 |u(x) - u(y)|^p |x - y|^(-1-sp) dy dx.

    With x = -xi and y = eta the unit square is split along xi = eta and each
    triangle is mapped to the square (Duffy), which removes the corner
    singularity at the origin.
    """
    spec = _default_spec(spec, params.d)
    p, sp = params.p, params.sp
    prev = None
    for level in range(3, 10):
        xi, _, _, wxi, _ = de_nodes(0.0, 1.0, level)
        t, _, tb, wt, _ = de_nodes(0.0, 1.0, level)
        XI, T = xi[:, None], t[None, :]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            k = XI * np.exp(-(1.0 + sp) * (np.log(XI) + np.log1p(T)))
            # the increments are formed directly: a plain difference loses
            # everything to cancellation at tiny xi, where k is huge
            H = (XI * (1.0 + T))[..., None]
            XIb = np.broadcast_to(XI, H.shape[:-1])[..., None]
            f1 = np.abs(u.increment(-XIb, H)) ** p  # eta = xi t < xi
            f2 = np.abs(u.increment(-(XI * T)[..., None], H)) ** p  # xi' = xi t < eta = xi
            F = (f1 + f2) * k
        F = np.where(np.isfinite(F), F, 0.0)
        val = float(wxi @ F @ wt)
        if prev is not None and abs(val - prev) <= spec.tol(val) and level >= 4:
            return IntegralResult(val, abs(val - prev), F.size, True, Method.DOUBLE_EXPONENTIAL.value)
        prev = val
    return IntegralResult(val, abs(val - prev), F.size, False, Method.DOUBLE_EXPONENTIAL.value)


def verify_interval(
    u: TestFunction,
    params: FractionalParams,
    interval: str = "(-1,1)",
    spec: QuadratureSpec | None = None,
) -> VerificationReport:
    """Interval fractional Hardy inequality with remainder, without the boundary-weight term.

    On (0, 1):   E - D_{1,s,p} int |f|^p x^-sp >= C_p R   with w = x^((sp-1)/p).
    On (-1, 1):  E - D_{1,s,p} int |f|^p (1-|x|)^-sp >= C_p (R on (-1,0)^2 + R on (0,1)^2)
                 with w = (1 - |x|)^((sp-1)/p).
    The energy E is over the whole square; D_{1,s,p} is the unweighted half-line constant.
    """
    if params.d != 1:
        raise ValueError("interval inequalities are one-dimensional")
    if not params.sp > 1.0:
        raise RegimeError("interval inequalities need sp > 1")
    spec = _default_spec(spec, params.d)
    key = interval.replace(" ", "")
    if key in ("(0,1)", "01", "interval01"):
        kind, bounds, halves = "interval01", (0.0, 1.0), [(0.0, 1.0)]
    elif key in ("(-1,1)", "11", "interval11"):
        kind, bounds, halves = "interval11", (-1.0, 1.0), [(-1.0, 0.0), (0.0, 1.0)]
    else:
        raise ValueError(f"unknown interval {interval!r}")
    _check_endpoints(u, *bounds)
    Cp = constant_Cp(params.p)
    base = FractionalParams(1, params.s, params.p, 0.0, 0.0)
    D = _sharp_constant(base, Regime.HALF_SPACE, spec)
    st = make_setting(params, kind)
    E, _ = _interval_pieces(st, u, bounds, False, spec)
    # the Hardy weight and the remainder weight have a kink at 0 on (-1, 1)
    Hs, Rs, Es = [], [], []
    for half in halves:
        e, r = _interval_pieces(st, u, half, True, spec)
        Es.append(e)
        Rs.append(r)
        Hs.append(_support_integral(u, st, lambda ux, dx: np.abs(ux) ** params.p * dx ** (-params.sp), spec, bounds=half))
    H = total(Hs)
    R = total(Rs)
    slack = E.value - D.value * H.value - Cp * R.value
    tol = tolerance_total(E, H, D.value, D.error, R, Cp)
    passed, status = _status(slack, tol, E.converged and H.converged and R.converged)
    extras = {"Cp": Cp, "interval": kind, "test_function": u.as_dict()}
    if kind == "interval11":
        cross = interval_cross_term(u, params, spec)
        half_slacks = [e.value - D.value * h.value - Cp * r.value for e, h, r in zip(Es, Hs, Rs)]
        extras.update({
            "half_slacks": half_slacks,
            "cross_term": cross.value,
            "cross_error": cross.error_estimate,
            "decomposition_gap": slack - (sum(half_slacks) + 2.0 * cross.value),
        })
    return VerificationReport(params, kind, E, H, D.value, R, Cp, None, slack, tol, passed, status, extras)
