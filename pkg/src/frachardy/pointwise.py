"""The scalar inequality behind the remainder terms, its auxiliary functions and scans.

For real a, 0 <= t <= 1 and 1 < p < 2 the slack

    |a - t|^p - (1 - t)^(p-1) (|a|^p - t) - c t (a^<p/2> - 1)^2

is nonnegative with c = C_p for all a, and with c = p - 1 for a >= 0.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy
from scipy.stats import qmc

from .constants import constant_Cp
from .model import french_power
from .quadrature import IntegralResult, Location, QuadratureSpec, SingularityDescriptor, integrate_1d

SLACK_TOL = 1e-10
POLE_EXCLUSION = 1e-4


class Variant(str, enum.Enum):
    ALL_REAL_CP = "AllReal_Cp"
    NONNEG_PMINUS1 = "Nonneg_pminus1"

    def constant(self, p: float) -> float:
        return constant_Cp(p) if self is Variant.ALL_REAL_CP else p - 1.0


# ---------------------------------------------------------------------------
# the slack


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | (t > 1.0)) or np.any(np.isnan(t)):
        raise ValueError("t must lie in [0, 1]")
    return t


def slack_scale(a, p: float):
    """max(1, |a|^p): the size of the float error in the slack."""
    return np.maximum(1.0, np.abs(np.asarray(a, dtype=float)) ** p)


def prop_slack_scaled(a, t, p: float, c: float):
    """The slack divided by max(1, |a|^p), computed without cancellation at large |a|."""
    a = np.asarray(a, dtype=float)
    t = _check_t(t)
    a, t = np.broadcast_arrays(a, t)
    big = np.abs(a) > 1.0
    ab = np.where(big, a, 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # |1 - t/a|^p - (1 - t)^(p-1), both as expm1 so small differences survive
        head = np.expm1(p * np.log1p(-t / ab)) - np.expm1((p - 1.0) * np.log1p(-t))
        tail = (1.0 - t) ** (p - 1.0) * t * np.abs(ab) ** (-p)
        sq = (np.sign(ab) - np.abs(ab) ** (-p / 2.0)) ** 2
    scaled_big = head + tail - c * t * sq
    direct = np.abs(a - t) ** p - (1.0 - t) ** (p - 1.0) * (np.abs(a) ** p - t) \
        - c * t * (french_power(a, p / 2.0) - 1.0) ** 2
    return np.where(big, scaled_big, direct)


def prop_slack(a, t, p: float, c: float):
    """|a - t|^p - (1 - t)^(p-1) (|a|^p - t) - c t (a^<p/2> - 1)^2."""
    out = prop_slack_scaled(a, t, p, c) * slack_scale(a, p)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanGrid:
    """a: linear on a_range plus log-spaced +-[1, a_log_max]; t: linear on t_range plus log-spaced [t_log_min, 0.1]."""

    a_range: tuple = (-50.0, 50.0)
    a_count: int = 2001
    t_range: tuple = (0.0, 1.0)
    t_count: int = 201
    p_list: tuple = tuple(round(1.1 + 0.1 * k, 10) for k in range(9))
    a_log_max: float = 1e6
    a_log_count: int = 400
    t_log_min: float = 1e-8
    t_log_count: int = 40

    def __post_init__(self):
        if self.a_count < 2 or self.t_count < 2:
            raise ValueError("grid counts must be at least 2")
        lo, hi = self.t_range
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError("t_range must be a sub-interval of [0, 1]")
        if not all(1.0 < p < 2.0 for p in self.p_list):
            raise ValueError("p values must lie in (1, 2)")
        object.__setattr__(self, "p_list", tuple(float(p) for p in self.p_list))

    def a_values(self, nonnegative: bool = False) -> np.ndarray:
        lin = np.linspace(*self.a_range, self.a_count)
        parts = [lin]
        if self.a_log_count > 0 and self.a_log_max > 1.0:
            lg = np.logspace(0.0, math.log10(self.a_log_max), self.a_log_count)
            parts += [lg, -lg]
        a = np.unique(np.concatenate(parts))
        return a[a >= 0.0] if nonnegative else a

    def t_values(self) -> np.ndarray:
        parts = [np.linspace(*self.t_range, self.t_count)]
        if self.t_log_count > 0:
            lg = np.logspace(math.log10(self.t_log_min), -1.0, self.t_log_count)
            parts.append(lg[(lg >= self.t_range[0]) & (lg <= self.t_range[1])])
        return np.unique(np.concatenate(parts))

    def size(self, nonnegative: bool = False) -> int:
        return self.a_values(nonnegative).size * self.t_values().size * len(self.p_list)


@dataclass
class ScanReport:
    worst_slack: float
    worst_point: tuple
    violations: int
    samples: int
    variant: str = Variant.ALL_REAL_CP.value
    constant_factor: float = 1.0
    tolerance: float = SLACK_TOL
    per_p: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_dict(self) -> dict:
        return {
            "worst_slack": self.worst_slack,
            "worst_point": {"a": self.worst_point[0], "t": self.worst_point[1], "p": self.worst_point[2]},
            "violations": self.violations,
            "samples": self.samples,
            "variant": self.variant,
            "constant_factor": self.constant_factor,
            "tolerance": self.tolerance,
            "per_p": {str(k): v for k, v in self.per_p.items()},
            "status": "pass" if self.passed else "violation",
        }


def _refine(a0, t0, p, c, n, seed):
    """Sobol points in a small box around (a0, t0)."""
    da = 0.05 * max(abs(a0), 1e-3)
    lo_t, hi_t = max(0.0, t0 - 0.05 * max(t0, 1e-6)), min(1.0, t0 + 0.05 * max(t0, 1e-6))
    u = qmc.Sobol(2, scramble=True, seed=seed).random(n)
    a = a0 - da + 2.0 * da * u[:, 0]
    t = lo_t + (hi_t - lo_t) * u[:, 1]
    return a, t, prop_slack_scaled(a, t, p, c)


def _scan_one(args):
    a, t, p, c, refine_n, seed = args
    A, T = np.meshgrid(a, t, indexing="ij")
    S = prop_slack_scaled(A, T, p, c)
    i = int(np.argmin(S))
    worst = float(S.flat[i])
    point = (float(A.flat[i]), float(T.flat[i]), p)
    viol = int(np.count_nonzero(S < -SLACK_TOL))
    n = S.size
    if refine_n:
        ra, rt, rs = _refine(point[0], point[1], p, c, refine_n, seed)
        if a.min() >= 0.0:
            keep = ra >= 0.0
            ra, rt, rs = ra[keep], rt[keep], rs[keep]
        n += rs.size
        viol += int(np.count_nonzero(rs < -SLACK_TOL))
        j = int(np.argmin(rs)) if rs.size else -1
        if j >= 0 and rs[j] < worst:
            worst, point = float(rs[j]), (float(ra[j]), float(rt[j]), p)
    return worst, point, viol, n


def scan_prop(
    grid: ScanGrid,
    variant: "Variant | str" = Variant.ALL_REAL_CP,
    constant_factor: float = 1.0,
    refine: int = 4096,
    seed: int = 0,
    workers: int = 1,
) -> ScanReport:
    """Minimum scaled slack over the grid, then Sobol refinement around the worst point of each p.

    ``constant_factor`` multiplies the variant's constant; values above 1
    probe optimality and are expected to fail.
    """
    variant = Variant(variant)
    nonneg = variant is Variant.NONNEG_PMINUS1
    if nonneg and grid.a_range[0] < 0.0:
        raise ValueError("the a >= 0 variant needs a_range inside [0, inf)")
    a, t = grid.a_values(nonneg), grid.t_values()
    jobs = [(a, t, p, variant.constant(p) * constant_factor, refine, seed + k) for k, p in enumerate(grid.p_list)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_scan_one, jobs))
    else:
        results = [_scan_one(j) for j in jobs]
    # min-reduction in grid order, so the merge does not depend on completion order
    worst, point, viol, n = math.inf, (math.nan, math.nan, math.nan), 0, 0
    per_p = {}
    for p, (w, pt, v, m) in zip(grid.p_list, results):
        per_p[p] = {"worst_slack": w, "a": pt[0], "t": pt[1], "violations": v}
        viol += v
        n += m
        if w < worst:
            worst, point = w, pt
    return ScanReport(worst, point, viol, n, variant.value, constant_factor, SLACK_TOL, per_p)


def optimality_probe(p_list=(1.1, 1.3, 1.5, 1.7, 1.9), factor: float = 1.05, a: float = 1e6, t: float = 1e-6) -> dict:
    """Scaled slack at (a, t) with c = factor (p - 1); negative values show p - 1 cannot be enlarged."""
    return {float(p): float(prop_slack_scaled(a, t, p, factor * (p - 1.0))) for p in p_list}


def empirical_constant(p: float, grid: ScanGrid | None = None, nonnegative: bool = False) -> float:
    """Largest c passing on the grid: the grid minimum of f(a, t) away from its pole.

    Exploratory only; the sharp constant is not known.
    """
    grid = grid or ScanGrid(a_count=801, t_count=101, a_log_count=200)
    a, t = grid.a_values(nonnegative), grid.t_values()
    A, T = np.meshgrid(a, t, indexing="ij")
    keep = (T > 0.0) & (np.abs(A - 1.0) >= POLE_EXCLUSION)
    return float(np.min(appendix_f(A[keep], T[keep], p)))


# ---------------------------------------------------------------------------
# the ratio f, its limit, and k


def appendix_f(a, t, p: float):
    """[|a - t|^p - (1 - t)^(p-1) (|a|^p - t)] / [t |a^<p/2> - 1|^2]."""
    a = np.asarray(a, dtype=float)
    t = _check_t(t)
    if np.any(t <= 0.0):
        raise ValueError("f needs t > 0")
    if np.any(a == 1.0):
        raise ValueError("f has a pole at a = 1")
    num = prop_slack_scaled(a, t, p, 0.0)
    # divide in scaled form: |a|^p / (a^<p/2> - 1)^2 = 1 / (sign a - |a|^(-p/2))^2 for |a| > 1
    big = np.abs(a) > 1.0
    ab = np.where(big, a, 2.0)
    den_big = (np.sign(ab) - np.abs(ab) ** (-p / 2.0)) ** 2
    den_small = (french_power(np.where(big, 0.0, a), p / 2.0) - 1.0) ** 2
    out = num / (t * np.where(big, den_big, den_small))
    return float(out) if np.ndim(out) == 0 else out


def f_limit(t, p: float):
    """lim_{a -> inf} f(a, t) = (1 - (1 - t)^(p-1)) / t."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        out = -np.expm1((p - 1.0) * np.log1p(-t)) / t
    return float(out) if np.ndim(out) == 0 else out


def appendix_k(p):
    """p log 2 - (p - 1) log(p - 1) - log(p + 2)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 1.0) | (p > 2.0)):
        raise ValueError("k needs 1 < p <= 2")
    out = p * math.log(2.0) - xlogy(p - 1.0, p - 1.0) - np.log(p + 2.0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# auxiliary functions certifying the sign conditions of the proof


def _log_monotonicity(a, t, p):
    """Sign proxy of df/da for a > 1: <= 0 iff f decreases in a."""
    return ((p - 1.0) * np.log1p(-t) + np.log(a ** (p - 1.0) - t * a ** (p / 2.0 - 1.0))
            - (p - 1.0) * np.log(a - t) - np.log1p(-t * a ** (p / 2.0 - 1.0)))


def _log_monotonicity_numerator(a, t, p):
    """Numerator of the a-derivative of the proxy above, linear in t."""
    return ((-p * t + t - p + 1.0) * a ** (p - 2.0) + (p / 2.0 - 1.0) * t * a ** (p / 2.0 - 2.0)
            + p * t / 2.0 * a ** (1.5 * p - 3.0) + p / 2.0 * a ** (p / 2.0 - 1.0)
            + (p / 2.0 - 1.0) * a ** (1.5 * p - 2.0))


def _numerator_at_t0(a, p):
    return a ** (p / 2.0 - 1.0) * (p / 2.0 - (1.0 - p / 2.0) * a ** (p - 1.0) - (p - 1.0) * a ** (p / 2.0 - 1.0))


def _numerator_at_t1(a, p):
    return a ** (p / 2.0 - 2.0) * _numerator_at_t1_bracket(a, p)


def _numerator_at_t1_bracket(a, p):
    return (2.0 * (1.0 - p) * a ** (p / 2.0) + p / 2.0 - 1.0 + p / 2.0 * a ** (p - 1.0)
            + p / 2.0 * a + (p / 2.0 - 1.0) * a ** p)


def _inversion_gap(a, t, p):
    """f(a, t) - f(1/a, t) times the common denominator, for 0 < a, t < 1."""
    return np.abs(a - t) ** p - (1.0 - a * t) ** p + (1.0 + t) * (1.0 - t) ** (p - 1.0) * (1.0 - a ** p)


def _inversion_gap_slope(x, t, p):
    """Bracket of the a-derivative of the gap for a <= t, in x = 1/a >= 1/t."""
    return -(t * x - 1.0) ** (p - 1.0) + t * (x - t) ** (p - 1.0) - (1.0 + t) * (1.0 - t) ** (p - 1.0)


def _negative_branch(x, t, p):
    """f at a = -x <= 0."""
    return ((x + t) ** p - (1.0 - t) ** (p - 1.0) * (x ** p - t)) / (t * (x ** (p / 2.0) + 1.0) ** 2)


def _negative_branch_margin(x, p):
    """Taylor lower bound of f(-x, t) minus p(p-1)/2, divided by p(p-1); >= 0 for p >= sqrt 2."""
    c = p * (p - 1.0) / 2.0
    return ((p - 1.0) * x ** p + p * x ** (p - 1.0) + c * (1.0 + x) ** (p - 2.0)
            - c * (x ** (p / 2.0) + 1.0) ** 2) / (p * (p - 1.0))


def _negative_branch_slope_bound(x, p):
    """Lower bound for the derivative of the margin at large x."""
    return (1.0 - p / 2.0) * x ** (p - 1.0) + x ** (p - 2.0) - (p + 2.0) / 4.0


def _negative_branch_simple(x, p):
    """((p-1) x^p + 1) / (x^(p/2) + 1)^2, with minimum (p-1)/p at x = (p-1)^(-2/p)."""
    return ((p - 1.0) * x ** p + 1.0) / (x ** (p / 2.0) + 1.0) ** 2


# name -> (function, arity, claimed sign); the property tests sample each on its domain
AUXILIARY = {
    "log_monotonicity": (_log_monotonicity, "a>1,t", "<=0"),
    "log_monotonicity_numerator": (_log_monotonicity_numerator, "a>1,t", "<=0"),
    "numerator_at_t0": (_numerator_at_t0, "a>1", "<=0"),
    "numerator_at_t1": (_numerator_at_t1, "a>1", "<=0"),
    "numerator_at_t1_bracket": (_numerator_at_t1_bracket, "a>1", "<=0"),
    "inversion_gap": (_inversion_gap, "a,t in (0,1)", ">=0"),
    "inversion_gap_slope": (_inversion_gap_slope, "x>=1/t", "<=0"),
    "negative_branch_margin": (_negative_branch_margin, "x>=0,p>=sqrt2", ">=0"),
    "negative_branch_slope_bound": (_negative_branch_slope_bound, "x>0,p>=sqrt2", ">=h(2/(p-1))"),
    "negative_branch_simple": (_negative_branch_simple, "x>=0", ">=(p-1)/p"),
}


# ---------------------------------------------------------------------------
# layer cake


def layercake_check(x: float, y: float, sp: float, spec: QuadratureSpec | None = None):
    """min(x, y)^(sp-1) against (sp - 1) int_0^min(x,y) t^(sp-2) dt."""
    if not sp > 1.0:
        raise ValueError("the layer-cake form needs sp > 1")
    if not (x > 0 and y > 0):
        raise ValueError("x and y must be positive")
    m = min(x, y)
    lhs = m ** (sp - 1.0)
    spec = spec or QuadratureSpec(rel_tol=1e-10)
    rhs = integrate_1d(lambda t: (sp - 1.0) * t ** (sp - 2.0), 0.0, m,
                       (SingularityDescriptor(Location.LEFT, sp - 2.0),), spec)
    return lhs, rhs
