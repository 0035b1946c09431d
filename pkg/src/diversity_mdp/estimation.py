"""Plug-in estimation of an index and of its asymptotic variance."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .distributions import CountableDistribution, Finite
from .indices import IndexFamily, base_sum, series_sum

__all__ = [
    "EmpiricalSample",
    "EstimateReport",
    "DegenerateVarianceError",
    "plugin_theta",
    "plugin_sigma_sq",
    "population_sigma_sq",
    "confidence_interval",
    "estimate",
    "theta_from_counts",
    "sigma_sq_from_counts",
    "normal_quantile",
    "VARIANCE_CLAMP",
]

VARIANCE_CLAMP = 1e-12
DEGENERATE_MESSAGE = (
    "degenerate variance: normal asymptotics fail "
    "(the plug-in variance vanishes, as it does for a uniform distribution)"
)


class DegenerateVarianceError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalSample:
    """Sample size and per-letter counts.

    ``counts`` maps positive letter indices to nonnegative counts that sum to
    ``n``.  A plain sequence is accepted and read as letters ``1, 2, ...``.
    """

    n: int
    counts: Mapping[int, int] = field(repr=False)

    def __init__(self, n: int, counts: Mapping[int, int] | Sequence[int]):
        if not isinstance(counts, Mapping):
            counts = {i + 1: c for i, c in enumerate(counts)}
        clean = {}
        for letter, c in counts.items():
            if int(letter) != letter or letter < 1:
                raise ValueError(f"letters are positive integers, got {letter!r}")
            if int(c) != c or c < 0:
                raise ValueError(f"counts must be nonnegative integers, got {c!r} for letter {letter}")
            if c:
                clean[int(letter)] = int(c)
        if n < 1:
            raise ValueError("sample size must be at least 1")
        if sum(clean.values()) != n:
            raise ValueError(f"counts sum to {sum(clean.values())}, expected n={n}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "counts", clean)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int] | Sequence[int]) -> EmpiricalSample:
        values = counts.values() if isinstance(counts, Mapping) else counts
        return cls(int(sum(values)), counts)

    def count_array(self) -> np.ndarray:
        return np.fromiter(self.counts.values(), dtype=np.int64, count=len(self.counts))

    def proportions(self) -> np.ndarray:
        return self.count_array() / self.n

    def as_distribution(self) -> Finite:
        size = max(self.counts)
        w = np.zeros(size)
        for letter, c in self.counts.items():
            w[letter - 1] = c / self.n
        return Finite(w)


@dataclass(frozen=True)
class EstimateReport:
    theta_hat: float
    sigma_hat_sq: float
    n: int
    confidence_interval: tuple[float, float, float] | None = None

    def as_dict(self) -> dict:
        lo, hi, level = self.confidence_interval or (None, None, None)
        return {
            "theta_hat": self.theta_hat,
            "sigma_hat_sq": self.sigma_hat_sq,
            "n": self.n,
            "ci_lower": lo,
            "ci_upper": hi,
            "level": level,
        }


def _clamp(v: float) -> float:
    # Cauchy-Schwarz makes the true value nonnegative; anything within the
    # clamp is rounding in the (near-)uniform case
    if abs(v) <= VARIANCE_CLAMP:
        return 0.0
    if v < 0:
        raise ArithmeticError(f"variance evaluated to {v!r}, below the rounding clamp")
    return v


def theta_from_counts(counts, n: int, family: IndexFamily) -> float:
    """Plug-in index from a vector of counts (letter identities irrelevant)."""
    p = np.asarray(counts, dtype=float) / n
    return float(family.apply(float(np.sum(family.base.g(p)))))


def sigma_sq_from_counts(counts, n: int, family: IndexFamily) -> float:
    p = np.asarray(counts, dtype=float) / n
    p = p[p > 0]
    base = family.base
    d = base.g_prime(p)
    v = float(np.sum(p * d * d)) - float(np.sum(p * d)) ** 2
    if family.transform != "none":
        h = float(np.sum(base.g(p)))
        v *= float(family.apply_prime(h)) ** 2
    return _clamp(v)


def plugin_theta(sample: EmpiricalSample, family: IndexFamily) -> float:
    """``sum_k g(p_hat_k)`` over observed letters, then the family's transform.

    >>> plugin_theta(EmpiricalSample.from_counts({1: 3, 2: 1}), IndexFamily.simpson())
    0.625
    """
    return theta_from_counts(sample.count_array(), sample.n, family)


def plugin_sigma_sq(sample: EmpiricalSample, family: IndexFamily) -> float:
    """Plug-in asymptotic variance.

    ``sum p g'(p)^2 - (sum p g'(p))^2`` at the empirical proportions; for a
    transformed index the result is multiplied by the squared transform
    slope at ``h_hat``.
    """
    return sigma_sq_from_counts(sample.count_array(), sample.n, family)


def population_sigma_sq(dist: CountableDistribution, family: IndexFamily, tol: float = 1e-12) -> float:
    """Asymptotic variance ``sum p g'(p)^2 - (sum p g'(p))^2`` of the plug-in estimator.

    Each series is truncated with remainder below ``tol / 8``.  Transformed
    indices scale the base variance by the squared slope of the transform at
    ``h_{alpha,0}``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    base = family.base
    if dist.support_size is None and base.alpha < 1:
        raise ValueError("alpha < 1 gives no tail control on an infinite alphabet")
    base.g_prime(0.5)  # regime check
    part = tol / 8.0
    second = series_sum(dist, lambda p: p * base.g_prime(p) ** 2, base.bound_pg2, part)
    first = series_sum(dist, lambda p: p * base.g_prime(p), base.bound_pg1, part)
    v = second - first * first
    if family.transform != "none":
        h = base_sum(family, dist, part)
        v *= float(family.apply_prime(h)) ** 2
    return _clamp(v)


def normal_quantile(q: float) -> float:
    return float(special.ndtri(q))


def confidence_interval(sample: EmpiricalSample, family: IndexFamily, level: float = 0.95) -> tuple[float, float]:
    """Normal interval ``theta_hat +- z * sigma_hat / sqrt(n)``.

    Raises
    ------
    DegenerateVarianceError
        When the plug-in variance is zero.
    """
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    s2 = plugin_sigma_sq(sample, family)
    if s2 == 0.0:
        raise DegenerateVarianceError(DEGENERATE_MESSAGE)
    center = plugin_theta(sample, family)
    half = normal_quantile(0.5 * (1.0 + level)) * math.sqrt(s2 / sample.n)
    return center - half, center + half


def estimate(sample: EmpiricalSample, family: IndexFamily, level: float | None = 0.95) -> EstimateReport:
    """Point estimate, plug-in variance and (when defined) the interval.

    The interval is left out when the variance is degenerate; callers that
    need it should call :func:`confidence_interval` and handle the error.
    """
    theta_hat = plugin_theta(sample, family)
    s2 = plugin_sigma_sq(sample, family)
    ci = None
    if level is not None and s2 > 0:
        lo, hi = confidence_interval(sample, family, level)
        ci = (lo, hi, float(level))
    return EstimateReport(theta_hat, s2, sample.n, ci)
