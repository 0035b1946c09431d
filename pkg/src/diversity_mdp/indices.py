"""Dichotomous diversity indices ``theta(P) = sum_i g(p_i)``.

The base family is ``g(x) = x^alpha (1 - x)^gamma``.  With ``gamma = 0`` and
``alpha > 1`` the sum ``h = sum_i p_i^alpha`` can be pushed through one of
three smooth transforms:

========  ==========================
tsallis   ``(h - 1) / (1 - alpha)``
renyi     ``log(h) / (1 - alpha)``
hill      ``h^(1 / (1 - alpha))``
========  ==========================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .distributions import CountableDistribution

__all__ = [
    "TRANSFORMS",
    "IndexFamily",
    "HolderClass",
    "g_eval",
    "g_prime",
    "theta",
    "series_sum",
    "holder_exponent",
    "holder_class",
    "in_classification_regime",
]

TRANSFORMS = ("none", "tsallis", "renyi", "hill")

_CHUNK = 1 << 20
_MAX_TERMS = 1 << 31
GRID_POINTS = 2001
SAFETY = 1.1


def in_classification_regime(alpha: float, gamma: float) -> bool:
    return alpha >= 1.0 and (gamma == 0.0 or gamma >= 1.0)


@dataclass(frozen=True)
class IndexFamily:
    """``g(x) = x^alpha (1-x)^gamma``, optionally transformed.

    Transforms act on ``h_{alpha,0}`` and so require ``gamma == 0`` and
    ``alpha > 1``.
    """

    alpha: float
    gamma: float = 0.0
    transform: str = "none"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma!r}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}; expected one of {TRANSFORMS}")
        if self.transform != "none" and (self.gamma != 0 or not self.alpha > 1):
            raise ValueError("transforms need gamma == 0 and alpha > 1")

    @classmethod
    def simpson(cls) -> IndexFamily:
        return cls(2.0, 0.0)

    @property
    def base(self) -> IndexFamily:
        """The untransformed ``h_{alpha,gamma}`` family."""
        if self.transform == "none":
            return self
        return IndexFamily(self.alpha, self.gamma)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        # numpy's 0.0 ** 0.0 == 1.0 matches the endpoint convention
        out = np.power(x, self.alpha)
        if self.gamma:
            out = out * np.power(1.0 - x, self.gamma)
        return out

    def g_prime(self, x):
        if not in_classification_regime(self.alpha, self.gamma):
            raise ValueError(
                f"g' is only supported for alpha >= 1 and gamma in {{0}} U [1, inf); "
                f"got alpha={self.alpha}, gamma={self.gamma}"
            )
        x = np.asarray(x, dtype=float)
        out = self.alpha * np.power(x, self.alpha - 1.0)
        if self.gamma:
            out = out * np.power(1.0 - x, self.gamma) - self.gamma * np.power(x, self.alpha) * np.power(
                1.0 - x, self.gamma - 1.0
            )
        return out

    # -- transforms of h -------------------------------------------------
    def apply(self, h):
        a = self.alpha
        if self.transform == "none":
            return h
        if self.transform == "tsallis":
            return (h - 1.0) / (1.0 - a)
        if self.transform == "renyi":
            return np.log(h) / (1.0 - a)
        return np.power(h, 1.0 / (1.0 - a))

    def apply_prime(self, h):
        a = self.alpha
        if self.transform == "none":
            return np.ones_like(np.asarray(h, dtype=float))
        if self.transform == "tsallis":
            return np.full_like(np.asarray(h, dtype=float), 1.0 / (1.0 - a))
        if self.transform == "renyi":
            return 1.0 / ((1.0 - a) * h)
        return np.power(h, a / (1.0 - a)) / (1.0 - a)

    def apply_second(self, h):
        a = self.alpha
        h = np.asarray(h, dtype=float)
        if self.transform in ("none", "tsallis"):
            return np.zeros_like(h)
        if self.transform == "renyi":
            return -1.0 / ((1.0 - a) * h * h)
        return a / (1.0 - a) ** 2 * np.power(h, (2.0 * a - 1.0) / (1.0 - a))

    # -- tail bounds in terms of a tail mass T --------------------------
    def _slope(self) -> float:
        # |g'(x)| <= (alpha + gamma) x^(alpha-1) in the classification regime
        return self.alpha + self.gamma

    def bound_g(self, T: float) -> float:
        """Bound on ``sum_{i>N} g(p_i)`` when ``sum_{i>N} p_i <= T``."""
        return T ** self.alpha

    def bound_pg1(self, T: float) -> float:
        return self._slope() * T ** self.alpha

    def bound_pg2(self, T: float) -> float:
        return self._slope() ** 2 * T ** (2.0 * self.alpha - 1.0)

    def label(self) -> str:
        if self.transform == "none":
            return f"h(alpha={self.alpha:g}, gamma={self.gamma:g})"
        return f"{self.transform}(alpha={self.alpha:g})"


@dataclass(frozen=True)
class HolderClass:
    beta: float
    K: float
    M: float


def g_eval(family: IndexFamily, x) -> float:
    return _scalar(family.g(_check_unit(x)))


def g_prime(family: IndexFamily, x) -> float:
    return _scalar(family.g_prime(_check_unit(x)))


def _check_unit(x):
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("arguments must lie in [0, 1]")
    return arr


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def _truncation_point(dist: CountableDistribution, bound, tol: float) -> int:
    if dist.support_size is not None:
        return dist.support_size
    N = 1024
    while bound(dist.tail_mass_bound(N)) >= tol:
        N *= 2
        if N > _MAX_TERMS:
            raise ValueError("series converges too slowly for the requested tolerance")
    return N


def series_sum(dist: CountableDistribution, term, bound, tol: float) -> float:
    """``sum_i term(p_i)`` truncated where ``bound(tail_mass_bound(N)) < tol``.

    ``bound`` maps a tail mass to an upper bound on the discarded terms.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    N = _truncation_point(dist, bound, tol)
    parts = []
    for start in range(1, N + 1, _CHUNK):
        stop = min(start + _CHUNK, N + 1)
        p = dist.masses(start, stop)
        parts.append(float(np.sum(term(p))))
    return math.fsum(parts)


def _require_summable(family: IndexFamily, dist: CountableDistribution):
    if dist.support_size is None and family.alpha < 1:
        raise ValueError("alpha < 1 gives no tail control on an infinite alphabet")


def base_sum(family: IndexFamily, dist: CountableDistribution, tol: float) -> float:
    """``h_{alpha,gamma}(P) = sum_i g(p_i)`` with truncation error below ``tol``."""
    base = family.base
    _require_summable(base, dist)
    return series_sum(dist, base.g, base.bound_g, tol)


def theta(family: IndexFamily, dist: CountableDistribution, tol: float = 1e-12) -> float:
    """Population index, transform included, with absolute error below ``tol``."""
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if family.transform == "none":
        return base_sum(family, dist, tol)
    a = family.alpha
    if family.transform == "tsallis":
        tol_h = tol * (a - 1.0)
    else:
        # partial sums bound h from below and |T'| decreases in h
        h_low = base_sum(family, dist, 1e-3)
        slope = abs(float(family.apply_prime(h_low)))
        tol_h = tol / (2.0 * slope)
    h = base_sum(family, dist, tol_h)
    return float(family.apply(h))


def holder_exponent(family: IndexFamily) -> float:
    """Hoelder exponent of ``g'`` for the base family ``x^alpha (1-x)^gamma``."""
    a, c = family.alpha, family.gamma
    if not in_classification_regime(a, c):
        raise ValueError(
            f"no Hoelder classification for alpha={a}, gamma={c}: "
            "need alpha >= 1 and gamma in {0} U [1, inf)"
        )
    if a > 1 and c > 1:
        return min(_less_one(a), _less_one(c), 1.0)
    if a > 1:
        return min(_less_one(a), 1.0)
    if c > 1:
        return min(_less_one(c), 1.0)
    return 1.0


def _less_one(x: float) -> float:
    # decimal subtraction so that 1.3 -> 0.3 rather than 0.30000000000000004
    return float(Decimal(repr(float(x))) - 1)


def holder_class(family: IndexFamily, grid_points: int = GRID_POINTS) -> HolderClass:
    """Exponent plus numerically certified constants for ``g'``.

    ``K`` bounds ``|g'(x) - g'(y)| / |x - y|^beta`` and ``M`` bounds the
    first-order Taylor remainder ``|g(x) - g(a) - g'(a)(x - a)| / |x - a|^(beta+1)``.
    Both are maxima over all pairs of a uniform grid on [0, 1], inflated by 10%.
    Transforms are ignored: the class is that of the base ``g``.
    """
    base = family.base
    beta = holder_exponent(base)
    x = np.linspace(0.0, 1.0, grid_points)
    gx = base.g(x)
    dx = base.g_prime(x)
    k_max = 0.0
    m_max = 0.0
    for i in range(grid_points):
        d = np.abs(x - x[i])
        d[i] = np.nan
        k_ratio = np.abs(dx - dx[i]) / d ** beta
        rem = np.abs(gx - gx[i] - dx[i] * (x - x[i])) / d ** (beta + 1.0)
        k_max = max(k_max, float(np.nanmax(k_ratio)))
        m_max = max(m_max, float(np.nanmax(rem)))
    tiny = np.finfo(float).tiny
    return HolderClass(beta, max(SAFETY * k_max, tiny), max(SAFETY * m_max, tiny))
