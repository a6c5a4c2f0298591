"""Sigmoidal efficiency curves and their characteristic SINR targets.

Energy efficiency of a link is ``rate * f(SINR) / power`` where f maps the
received SINR to a block success probability.  Two standard families are
supported:

* ``PacketSuccess(m)``: f(x) = (1 - exp(-x))**m, the success probability of
  an m-symbol uncoded block.
* ``RateExp(c)``: f(x) = exp(-c/x) with c = 2**rate - 1, an outage-style
  curve.

Two scalar roots drive everything downstream.  The *selfish* target,
solving x f'(x) = f(x), is the SINR every best-responding transmitter aims
at.  The *fair* target, solving x (1 - a x) f'(x) = f(x) with ``a`` the
effective interferer load (K-1)/N, is the common SINR of the cooperative
power profile where all received powers are equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import NoRootError

__all__ = [
    "PacketSuccess",
    "RateExp",
    "EfficiencyFunction",
    "LoadShape",
    "UniquenessReport",
    "equilibrium_sinr",
    "fair_sinr",
    "fair_uniqueness",
]

ROOT_RTOL = 1e-10
ROOT_MAX_ITER = 200


def _as_float_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(arr, scalar):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class PacketSuccess:
    """Block success curve f(x) = (1 - exp(-x))**m for an m-symbol block."""

    block_length: int

    def __post_init__(self):
        if self.block_length < 1:
            raise ValueError("block_length must be a positive integer")

    @property
    def is_sigmoidal(self) -> bool:
        # m = 1 is concave everywhere: no inflection, no selfish target.
        return self.block_length >= 2

    def value(self, x):
        x, scalar = _as_float_array(x)
        if np.any(x < 0):
            raise ValueError("efficiency curves are defined for SINR >= 0")
        return _maybe_scalar((1.0 - np.exp(-x)) ** self.block_length, scalar)

    def deriv(self, x):
        x, scalar = _as_float_array(x)
        if np.any(x < 0):
            raise ValueError("first derivative needs SINR >= 0")
        m = self.block_length
        # 0**0 == 1 makes the m = 1 case correct at x = 0.
        out = m * np.exp(-x) * (1.0 - np.exp(-x)) ** (m - 1)
        return _maybe_scalar(out, scalar)

    def deriv2(self, x):
        x, scalar = _as_float_array(x)
        if np.any(x < 0):
            raise ValueError("second derivative needs SINR >= 0")
        m = self.block_length
        e = np.exp(-x)
        if m == 1:
            return _maybe_scalar(-e, scalar)
        out = m * e * (1.0 - e) ** (m - 2) * (m * e - 1.0)
        return _maybe_scalar(out, scalar)

    def deriv_ratio(self, x):
        """f''(x)/f'(x) in closed form, robust where f' underflows."""
        x, scalar = _as_float_array(x)
        if np.any(x <= 0):
            raise ValueError("curvature ratio needs SINR > 0")
        e = np.exp(-x)
        return _maybe_scalar((self.block_length * e - 1.0) / (1.0 - e), scalar)


@dataclass(frozen=True)
class RateExp:
    """Outage-style curve f(x) = exp(-c/x), extended by f(0) = 0."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")

    @classmethod
    def from_rate(cls, rate: float) -> "RateExp":
        return cls(2.0**rate - 1.0)

    @property
    def is_sigmoidal(self) -> bool:
        return True

    def value(self, x):
        x, scalar = _as_float_array(x)
        if np.any(x < 0):
            raise ValueError("efficiency curves are defined for SINR >= 0")
        with np.errstate(divide="ignore"):
            out = np.exp(-self.c / x)
        return _maybe_scalar(np.where(x > 0, out, 0.0), scalar)

    def deriv(self, x):
        x, scalar = _as_float_array(x)
        if np.any(x <= 0):
            raise ValueError("derivative of RateExp needs SINR > 0")
        return _maybe_scalar(self.c / x**2 * np.exp(-self.c / x), scalar)

    def deriv2(self, x):
        x, scalar = _as_float_array(x)
        if np.any(x <= 0):
            raise ValueError("second derivative of RateExp needs SINR > 0")
        c = self.c
        return _maybe_scalar(c * (c - 2.0 * x) / x**4 * np.exp(-c / x), scalar)

    def deriv_ratio(self, x):
        """f''(x)/f'(x) in closed form."""
        x, scalar = _as_float_array(x)
        if np.any(x <= 0):
            raise ValueError("curvature ratio needs SINR > 0")
        return _maybe_scalar((self.c - 2.0 * x) / x**2, scalar)


EfficiencyFunction = Union[PacketSuccess, RateExp]


@dataclass(frozen=True)
class LoadShape:
    """Interference geometry of the network: K players over spreading N."""

    players: int
    spreading: int = 1

    def __post_init__(self):
        if self.players < 1:
            raise ValueError("players must be >= 1")
        if self.spreading < 1:
            raise ValueError("spreading must be >= 1")

    @property
    def effective_interferers(self) -> float:
        """(K-1)/N, the interference weight seen by each user."""
        return (self.players - 1) / self.spreading

    @property
    def spectral_load(self) -> float:
        """alpha = K/N."""
        return self.players / self.spreading


def _bisect_secant(g, lo, hi, f_scale, rtol=ROOT_RTOL, max_iter=ROOT_MAX_ITER):
    """Root of g on [lo, hi] with g(lo) > 0 > g(hi).

    Bisection steps keep the bracket shrinking; every other iteration a
    secant step through the bracket endpoints is tried instead, accepted
    when it lands strictly inside.  Terminates on |g(x)| <= rtol *
    f_scale(x), i.e. on the residual relative to the curve value.
    """
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if not (glo > 0 and ghi < 0):
        raise NoRootError(f"bracket [{lo:g}, {hi:g}] does not straddle a root")
    x = lo
    for k in range(max_iter):
        trial = None
        if k % 2 and ghi != glo:
            s = hi - ghi * (hi - lo) / (ghi - glo)
            if lo < s < hi:
                trial = s
        if trial is None:
            trial = 0.5 * (lo + hi)
        x, gx = trial, g(trial)
        if abs(gx) <= rtol * f_scale(x):
            return x
        if gx > 0:
            lo, glo = x, gx
        else:
            hi, ghi = x, gx
        if hi - lo <= abs(hi) * 1e-16:
            return 0.5 * (lo + hi)
    return x


def _grow_positive_lo(g, lo, hi):
    """Move lo to where g is strictly positive.

    Walks up past the region where g underflows to exactly zero, then down
    if the root sits below the starting point.
    """
    while g(lo) == 0.0:
        lo *= 10.0
        if lo >= hi:
            raise NoRootError("function underflows on the whole bracket")
    while g(lo) < 0.0:
        lo /= 10.0
        if lo < 1e-300:
            raise NoRootError("no positive region found near zero")
    return lo


@lru_cache(maxsize=None)
def equilibrium_sinr(f: EfficiencyFunction, cap: float = 1e4) -> float:
    """SINR target of a selfish best response: the root of x f'(x) = f(x).

    The bracket starts at [1e-6, 1] and the upper end doubles until the
    sign flips; failing below ``cap`` raises :class:`NoRootError`.
    """
    if not f.is_sigmoidal:
        raise ValueError("selfish SINR target needs a sigmoidal curve")

    def g(x):
        return x * f.deriv(x) - f.value(x)

    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > cap:
            raise NoRootError(f"no sign change of x f' - f below cap {cap:g}")
    lo = _grow_positive_lo(g, 1e-6, hi)
    return _bisect_secant(g, lo, hi, f.value)


@lru_cache(maxsize=None)
def fair_sinr(f: EfficiencyFunction, shape: LoadShape, cap: float = 1e4) -> float:
    """SINR target of the SINR-fair cooperative profile.

    Root of x (1 - a x) f'(x) = f(x) with a = (K-1)/N, searched on
    (0, 1/a).  With no interferers (a = 0) this degenerates to the selfish
    target.  The result always satisfies fair < selfish when a > 0.
    """
    if not f.is_sigmoidal:
        raise ValueError("fair SINR target needs a sigmoidal curve")
    a = shape.effective_interferers
    if a == 0:
        return equilibrium_sinr(f, cap)

    def g(x):
        return x * (1.0 - a * x) * f.deriv(x) - f.value(x)

    hi_max = min((1.0 - 1e-9) / a, cap)
    hi = min(1.0, 0.5 * hi_max)
    while g(hi) > 0:
        hi = min(2.0 * hi, hi_max)
        if hi == hi_max and g(hi) > 0:
            raise NoRootError("no sign change of x(1-ax) f' - f on (0, 1/a)")
    lo = _grow_positive_lo(g, min(1e-6, 0.5 * hi), hi)
    return _bisect_secant(g, lo, hi, f.value)


@dataclass(frozen=True)
class UniquenessReport:
    """Outcome of sampling the fair-point uniqueness condition."""

    holds: bool
    sign_changes: int
    crossing: float | None
    detail: str = ""


@lru_cache(maxsize=None)
def fair_uniqueness(
    f: EfficiencyFunction, shape: LoadShape, samples: int = 2048
) -> UniquenessReport:
    """Sample g(x) = f''/f' - 2a/(1 - a x) for a single +/- crossing.

    Exactly one sign change, from positive to negative, on (0, 1/a) is
    sufficient for the SINR-fair stationarity system to have a unique
    solution.  Returns the located crossing abscissa when it holds.
    """
    a = shape.effective_interferers
    if a <= 0:
        raise ValueError("uniqueness check needs at least one effective interferer")
    xs = np.linspace(0.0, 1.0 / a, samples + 2)[1:-1]
    with np.errstate(over="ignore", invalid="ignore"):
        vals = f.deriv_ratio(xs) - 2.0 * a / (1.0 - a * xs)
    ok = np.isfinite(vals) & (vals != 0.0)
    xs, vals = xs[ok], vals[ok]
    if xs.size < 8:
        return UniquenessReport(False, 0, None, "too few finite samples")
    signs = np.sign(vals)
    flips = np.nonzero(signs[1:] != signs[:-1])[0]
    if flips.size != 1:
        return UniquenessReport(
            False, int(flips.size), None, f"{flips.size} sign changes"
        )
    k = int(flips[0])
    if not (signs[0] > 0 and signs[-1] < 0):
        return UniquenessReport(False, 1, None, "single change but wrong direction")
    return UniquenessReport(True, 1, float(0.5 * (xs[k] + xs[k + 1])))
