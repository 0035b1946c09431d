"""Moderate-deviation scales, their validity checks, and tail thresholds.

At scale ``b_n`` the plug-in estimator satisfies, for every ``r > 0``,

    (1 / b_n^2) log P( sqrt(n) / (b_n sigma_n) |theta_hat - theta_n| > r ) -> -r^2 / 2

provided ``b_n -> inf`` and ``b_n / (sqrt(n) sigma_n^(1/(2 beta - 1))) -> 0``,
where ``beta`` is the Hoelder exponent of ``g'`` (``beta = 1`` for Lipschitz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .distributions import CountableDistribution, TriangularFamily
from .estimation import population_sigma_sq
from .indices import IndexFamily, holder_exponent, theta

__all__ = [
    "MdpScale",
    "power_scale",
    "log_power_scale",
    "MdpContext",
    "ScaleReport",
    "ScaleConditionError",
    "validate_scale",
    "rate_function",
    "tail_threshold",
    "mdp_tail_approximation",
    "condition_text",
]

SIGMA_TOL = 1e-10


class ScaleConditionError(ValueError):
    """The requested scale does not satisfy the moderate-deviation condition."""


@dataclass(frozen=True)
class MdpScale:
    """``b_n = c n^rho`` (``form="power"``) or ``b_n = c (log n)^kappa`` (``form="log_power"``)."""

    form: str
    c: float
    exponent: float

    def __post_init__(self):
        if self.form not in ("power", "log_power"):
            raise ValueError(f"unknown scale form {self.form!r}")
        if not self.c > 0:
            raise ValueError(f"scale constant must be positive, got {self.c!r}")
        # rho >= 1/2 is representable so that validate_scale can reject it
        if not self.exponent > 0:
            raise ValueError(f"scale exponent must be positive, got {self.exponent!r}")

    def __call__(self, n: int) -> float:
        if self.form == "power":
            return self.c * float(n) ** self.exponent
        return self.c * math.log(n) ** self.exponent

    def describe(self) -> str:
        if self.form == "power":
            return f"b_n = {self.c:g} * n^{self.exponent:g}"
        return f"b_n = {self.c:g} * (log n)^{self.exponent:g}"


def power_scale(c: float, rho: float) -> MdpScale:
    return MdpScale("power", float(c), float(rho))


def log_power_scale(c: float, kappa: float) -> MdpScale:
    return MdpScale("log_power", float(c), float(kappa))


@dataclass
class MdpContext:
    """Index family, data source and scale for one moderate-deviation study.

    ``source`` is either a fixed distribution or a triangular family.  When
    ``beta`` is omitted it is taken from the Hoelder classification of the
    base ``g``.
    """

    family: IndexFamily
    source: CountableDistribution | TriangularFamily
    scale: MdpScale
    beta: float | None = None
    tol: float = SIGMA_TOL
    _sigma_cache: dict = field(default_factory=dict, repr=False)
    _theta_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.beta is None:
            self.beta = holder_exponent(self.family.base)

    @property
    def triangular(self) -> bool:
        return isinstance(self.source, TriangularFamily)

    def dist(self, n: int) -> CountableDistribution:
        return self.source(n) if self.triangular else self.source

    def _key(self, n):
        return n if self.triangular else 0

    def sigma_sq(self, n: int) -> float:
        k = self._key(n)
        if k not in self._sigma_cache:
            self._sigma_cache[k] = population_sigma_sq(self.dist(n), self.family, self.tol)
        return self._sigma_cache[k]

    def sigma(self, n: int) -> float:
        return math.sqrt(self.sigma_sq(n))

    def theta(self, n: int) -> float:
        k = self._key(n)
        if k not in self._theta_cache:
            self._theta_cache[k] = theta(self.family, self.dist(n), self.tol)
        return self._theta_cache[k]


@dataclass
class ScaleReport:
    ok: bool
    worst_ratio: float
    failing_n: list[int]
    condition: str
    rows: list[tuple[int, float, float, float]]  # (n, b_n, sigma_n, ratio)

    def message(self) -> str:
        if self.ok:
            return f"scale condition holds on the grid: {self.condition}"
        return f"scale condition failed: {self.condition} (failing n: {self.failing_n})"


def condition_text(beta: float) -> str:
    if beta == 1.0:
        return "b_n -> inf and b_n / (sqrt(n) * sigma_n) -> 0"
    return f"b_n -> inf and b_n / (sqrt(n) * sigma_n^(1/(2*beta-1))) -> 0 with beta={beta:g}"


def validate_scale(ctx: MdpContext, n_grid) -> ScaleReport:
    """Finite-grid surrogate for the scale condition.

    Evaluates ``r_n = b_n / (sqrt(n) sigma_n^(1/(2 beta - 1)))`` on the grid.
    The check passes when ``r_n`` strictly decreases over the upper half of
    the grid and ``r_n < 1`` at the largest ``n``; the full table is
    returned either way.
    """
    beta = ctx.beta
    if not beta > 0.5:
        raise ScaleConditionError(f"MDP unproven for beta <= 1/2 (beta={beta:g})")
    grid = [int(n) for n in n_grid]
    if not grid:
        raise ValueError("empty n grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n grid must be strictly increasing")
    power = 1.0 / (2.0 * beta - 1.0)
    rows = []
    for n in grid:
        b = ctx.scale(n)
        s = ctx.sigma(n)
        ratio = b / (math.sqrt(n) * s ** power) if s > 0 else math.inf
        rows.append((n, b, s, ratio))
    ratios = [r[3] for r in rows]
    failing = []
    top = len(grid) // 2 if len(grid) > 1 else 0
    if len(grid) > 1:
        top = min(top, len(grid) - 2)
    for k in range(top + 1, len(grid)):
        if not ratios[k] < ratios[k - 1]:
            failing.append(grid[k])
    if not ratios[-1] < 1.0 and grid[-1] not in failing:
        failing.append(grid[-1])
    tail_ratios = ratios[top:]
    return ScaleReport(
        ok=not failing,
        worst_ratio=max(tail_ratios),
        failing_n=failing,
        condition=condition_text(beta),
        rows=rows,
    )


def rate_function(r: float) -> float:
    """Limit of ``(1/b_n^2) log P(...)``: ``-r^2 / 2``."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r!r}")
    return -0.5 * r * r


def tail_threshold(ctx: MdpContext, n: int, r: float) -> float:
    """``t = r b_n sigma_n / sqrt(n)``, so the event is ``|theta_hat - theta_n| > t``."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r!r}")
    s = ctx.sigma(n)
    if s == 0:
        raise ScaleConditionError("degenerate variance: sigma_n = 0")
    return r * ctx.scale(n) * s / math.sqrt(n)


def mdp_tail_approximation(r: float, n: int, scale) -> float:
    """Asymptotic surrogate ``exp(-b_n^2 r^2 / 2)`` for the tail probability.

    This is not a bound; it ignores every subexponential factor.
    """
    if not r > 0:
        raise ValueError(f"r must be positive, got {r!r}")
    b = scale(n) if callable(scale) else float(scale)
    return math.exp(-0.5 * b * b * r * r)
