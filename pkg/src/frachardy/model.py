"""Parameter tuples, regime checks, weights and the signed power."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class RegimeError(ValueError):
    """A parameter tuple violates the hypotheses of the selected regime."""


class SingularPointError(ValueError):
    """A weight was evaluated on its singular set."""


class Regime(str, enum.Enum):
    FULL_SPACE = "fullspace"
    HALF_SPACE = "halfspace"
    HSM_HALF_SPACE = "hsm-halfspace"
    HSM_GENERAL = "hsm-general"

    @classmethod
    def parse(cls, name: "str | Regime") -> "Regime":
        if isinstance(name, Regime):
            return name
        key = name.strip().lower().replace("_", "-")
        aliases = {
            "full": cls.FULL_SPACE,
            "punctured": cls.FULL_SPACE,
            "half": cls.HALF_SPACE,
            "hsm": cls.HSM_HALF_SPACE,
            "hsm-half": cls.HSM_HALF_SPACE,
        }
        if key in aliases:
            return aliases[key]
        return cls(key)

    @property
    def is_half_space(self) -> bool:
        return self is not Regime.FULL_SPACE


@dataclass(frozen=True)
class FractionalParams:
    """The tuple (d, s, p, alpha, beta) with precomputed exponents.

    ``gamma_full`` is the exponent of the full-space ground state
    ``|x|**-gamma_full`` and ``gamma_half`` that of the half-space ground
    state ``x_d**-gamma_half``.
    """

    d: int
    s: float
    p: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma_full: float = field(init=False)
    gamma_half: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise RegimeError(f"d must be a positive integer, got {self.d}")
        if not 0.0 < self.s < 1.0:
            raise RegimeError(f"s={self.s} not in (0, 1)")
        # p == 2 is admitted only as the boundary cross-check mode of the constants
        if not 1.0 < self.p <= 2.0:
            raise RegimeError(f"p={self.p} not in (1, 2)")
        object.__setattr__(self, "d", int(self.d))
        sp = self.s * self.p
        object.__setattr__(self, "gamma_full", (self.d - self.alpha - self.beta - sp) / self.p)
        object.__setattr__(self, "gamma_half", (1.0 + self.alpha + self.beta - sp) / self.p)

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def q(self) -> float:
        """Critical Sobolev exponent dp/(d - sp); requires sp < d."""
        if self.sp >= self.d:
            raise RegimeError(f"q undefined: sp={self.sp} >= d={self.d}")
        return self.d * self.p / (self.d - self.sp)

    @property
    def boundary_mode(self) -> bool:
        return self.p == 2.0

    def with_weights(self, alpha: float, beta: float) -> "FractionalParams":
        return FractionalParams(self.d, self.s, self.p, alpha, beta)

    def as_dict(self) -> dict:
        return {"d": self.d, "s": self.s, "p": self.p, "alpha": self.alpha, "beta": self.beta}


def _require_open(name: str, value: float, lo: float, hi: float) -> None:
    if not lo < value < hi:
        raise RegimeError(f"{name}={value:g} not in ({lo:g}, {hi:g})")


def validate(params: FractionalParams, regime: "Regime | str", allow_boundary: bool = False) -> FractionalParams:
    """Return ``params`` unchanged if they satisfy the regime's hypotheses.

    Raises :class:`RegimeError` naming the violated interval otherwise.
    ``allow_boundary`` admits p = 2 (constant cross-checks only).
    """
    regime = Regime.parse(regime)
    if params.boundary_mode and not allow_boundary:
        raise RegimeError(f"p={params.p:g} not in (1, 2)")
    a, b, sp, d = params.alpha, params.beta, params.sp, params.d
    if regime is Regime.FULL_SPACE:
        for name, v in (("alpha", a), ("beta", b), ("alpha+beta", a + b)):
            _require_open(name, v, -sp, d)
        if math.isclose(sp + a + b, d, rel_tol=0.0, abs_tol=1e-12):
            raise RegimeError(f"sp+alpha+beta={sp + a + b:g} = d excluded")
        return params
    if regime is Regime.HSM_GENERAL and (a != 0.0 or b != 0.0):
        raise RegimeError("general-domain HSM requires alpha = beta = 0")
    for name, v in (("alpha", a), ("beta", b), ("alpha+beta", a + b)):
        _require_open(name, v, -1.0, sp)
    if math.isclose(a + b + sp, 1.0, rel_tol=0.0, abs_tol=1e-12):
        raise RegimeError("alpha+beta+sp=1 excluded")
    if regime in (Regime.HSM_HALF_SPACE, Regime.HSM_GENERAL):
        _require_open("sp", sp, 1.0, d)
    return params


def french_power(a, k: float):
    """Signed power ``|a|**k * sign(a)``; zero maps to zero."""
    a = np.asarray(a, dtype=float)
    out = np.sign(a) * np.abs(a) ** k
    return out if out.ndim else float(out)


def _norm(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.abs(x)
    return np.sqrt(np.sum(x * x, axis=-1))


def weight_w1(x, params: FractionalParams):
    """Full-space ground state ``|x|**-gamma_full``; ``x`` has trailing axis d (or is a radius)."""
    r = _norm(x)
    if np.any(r == 0.0):
        raise SingularPointError("w1 is singular at the origin")
    out = r ** (-params.gamma_full)
    return out if np.ndim(out) else float(out)


def weight_w2(x, params: FractionalParams):
    """Half-space ground state ``x_d**-gamma_half``; ``x`` has trailing axis d (or is x_d)."""
    x = np.asarray(x, dtype=float)
    xd = x if x.ndim == 0 else x[..., -1]
    if np.any(xd <= 0.0):
        raise SingularPointError("w2 requires x_d > 0")
    out = xd ** (-params.gamma_half)
    return out if np.ndim(out) else float(out)


def coupling(wx, wy, p: float):
    """``min(wx, wy) * max(wx, wy)**(p - 1)``, the remainder coupling of two weights."""
    wx = np.asarray(wx, dtype=float)
    wy = np.asarray(wy, dtype=float)
    out = np.minimum(wx, wy) * np.maximum(wx, wy) ** (p - 1.0)
    return out if out.ndim else float(out)
