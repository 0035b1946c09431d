"""Replicated sampling experiments and an exact enumeration oracle.

Every replicate owns a random stream derived from
``(master_seed, n_index, replicate_index)``; results are written into arrays
indexed by replicate, so output does not depend on how replicates are split
across worker threads.

Rare events need enough replicates: at the largest ``n`` choose
``b_n^2 <= log(R) / (r^2 / 2) - 2`` so that about ``e^2`` hits are expected.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .distributions import CountableDistribution, Finite, TriangularFamily
from .estimation import population_sigma_sq, sigma_sq_from_counts, theta_from_counts
from .indices import IndexFamily, theta
from .mdp import MdpContext, MdpScale, ScaleConditionError, validate_scale

__all__ = [
    "ExperimentConfig",
    "RateRow",
    "RateCurve",
    "RemainderStats",
    "replicate_rng",
    "simulate_plugin",
    "run_experiment",
    "exact_plugin_distribution",
    "exact_tail_probability",
    "clt_diagnostic",
    "remainder_diagnostic",
    "remainder",
    "normalized_deviations",
    "format_float",
]

CHUNK = 512
MAX_ORACLE_SUPPORT = 4
MAX_ORACLE_N = 12


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def replicate_rng(master_seed: int, n_index: int, replicate: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(n_index, replicate))
    return np.random.Generator(np.random.PCG64(seq))


def simulate_plugin(
    dist: CountableDistribution,
    family: IndexFamily,
    n: int,
    replicates: int,
    master_seed: int,
    n_index: int = 0,
    threads: int = 1,
    with_sigma: bool = False,
):
    """Plug-in estimates over ``replicates`` independent samples of size ``n``.

    Returns an array of ``theta_hat`` values, or a pair of arrays
    ``(theta_hat, sigma_hat_sq)`` when ``with_sigma`` is set.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    est = np.empty(replicates)
    var = np.empty(replicates) if with_sigma else None

    def work(start):
        for j in range(start, min(start + CHUNK, replicates)):
            c = dist.count_vector(n, replicate_rng(master_seed, n_index, j))
            est[j] = theta_from_counts(c, n, family)
            if var is not None:
                var[j] = sigma_sq_from_counts(c, n, family)

    starts = range(0, replicates, CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    return (est, var) if with_sigma else est


@dataclass
class ExperimentConfig:
    source: CountableDistribution | TriangularFamily
    family: IndexFamily
    n_grid: Sequence[int]
    replicates: int
    r_grid: Sequence[float]
    scale: MdpScale
    master_seed: int = 0
    tol: float = 1e-10
    threads: int = 1

    def __post_init__(self):
        grid = [int(n) for n in self.n_grid]
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be a non-empty strictly increasing list")
        if grid[0] < 1:
            raise ValueError("sample sizes must be positive")
        if self.replicates < 100:
            raise ValueError("rate estimation needs at least 100 replicates")
        if not self.r_grid or any(not r > 0 for r in self.r_grid):
            raise ValueError("r_grid must contain positive values")
        self.n_grid = grid
        self.r_grid = [float(r) for r in self.r_grid]

    def context(self) -> MdpContext:
        return MdpContext(self.family, self.source, self.scale, tol=self.tol)


@dataclass
class RateRow:
    n: int
    b_n: float
    r: float
    hits: int
    p_hat: float
    L_hat: float
    se: float
    censored: bool


@dataclass
class RateCurve:
    """Empirical ``(1/b_n^2) log P(tail)`` per ``(n, r)``.

    Censored rows carry the upper bound ``log(1/R) / b_n^2`` and ``se = nan``.
    """

    replicates: int
    rows: list[RateRow] = field(default_factory=list)

    COLUMNS = ("n", "b_n", "r", "p_hat", "L_hat", "se", "censored")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows:
            w.writerow(
                [
                    row.n,
                    format_float(row.b_n),
                    format_float(row.r),
                    format_float(row.p_hat),
                    format_float(row.L_hat),
                    format_float(row.se),
                    int(row.censored),
                ]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, replicates: int) -> RateCurve:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != cls.COLUMNS:
            raise ValueError(f"expected columns {cls.COLUMNS}, got {reader.fieldnames}")
        rows = []
        for rec in reader:
            p = float(rec["p_hat"])
            rows.append(
                RateRow(
                    n=int(rec["n"]),
                    b_n=float(rec["b_n"]),
                    r=float(rec["r"]),
                    hits=int(round(p * replicates)),
                    p_hat=p,
                    L_hat=float(rec["L_hat"]),
                    se=float(rec["se"]),
                    censored=rec["censored"] == "1",
                )
            )
        return cls(replicates, rows)

    def row(self, n: int, r: float) -> RateRow:
        for row in self.rows:
            if row.n == n and row.r == r:
                return row
        raise KeyError((n, r))


def _rate_row(n, b, r, hits, R) -> RateRow:
    b2 = b * b
    p = hits / R
    if hits == 0:
        return RateRow(n, b, r, 0, 0.0, math.log(1.0 / R) / b2, math.nan, True)
    se = math.sqrt(p * (1.0 - p) / R) / (p * b2)
    return RateRow(n, b, r, hits, p, math.log(p) / b2, se, False)


def normalized_deviations(ctx: MdpContext, n: int, estimates: np.ndarray) -> np.ndarray:
    """``sqrt(n) / (b_n sigma_n) |theta_hat - theta_n|`` per replicate."""
    s = ctx.sigma(n)
    diff = np.abs(estimates - ctx.theta(n))
    if s == 0:
        # zero threshold: any deviation at all is a hit
        return np.where(diff > 0, math.inf, 0.0)
    return math.sqrt(n) / (ctx.scale(n) * s) * diff


def run_experiment(cfg: ExperimentConfig, *, check_scale: bool = True) -> RateCurve:
    """Estimate the moderate-deviation rate on every ``(n, r)`` of the config."""
    ctx = cfg.context()
    if check_scale:
        report = validate_scale(ctx, cfg.n_grid)
        if not report.ok:
            raise ScaleConditionError(report.message())
    curve = RateCurve(cfg.replicates)
    for k, n in enumerate(cfg.n_grid):
        est = simulate_plugin(ctx.dist(n), cfg.family, n, cfg.replicates, cfg.master_seed, k, cfg.threads)
        dev = normalized_deviations(ctx, n, est)
        b = cfg.scale(n)
        for r in cfg.r_grid:
            hits = int(np.count_nonzero(dev > r))
            curve.rows.append(_rate_row(n, b, r, hits, cfg.replicates))
    return curve


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, k - 1):
            yield (first, *rest)


def exact_plugin_distribution(dist: Finite, family: IndexFamily, n: int) -> list[tuple[float, float]]:
    """Exact law of the plug-in estimator by enumerating all count vectors.

    Limited to support size 4 and ``n <= 12`` (at most 455 compositions).
    Returns ``(value, probability)`` pairs sorted by value; compositions with
    the same multiset of counts share a value.
    """
    if dist.support_size is None or dist.support_size > MAX_ORACLE_SUPPORT or n > MAX_ORACLE_N or n < 1:
        raise ValueError(
            f"instance too large for enumeration (support <= {MAX_ORACLE_SUPPORT}, n <= {MAX_ORACLE_N})"
        )
    p = dist.masses(1, dist.support_size + 1)
    log_fact = [math.lgamma(i + 1) for i in range(n + 1)]
    by_value: dict[float, float] = {}
    value_of: dict[tuple[int, ...], float] = {}
    for comp in _compositions(n, len(p)):
        prob = math.exp(log_fact[n] - sum(log_fact[c] for c in comp))
        for pi, c in zip(p, comp):
            if c:
                prob *= pi ** c
        if prob == 0.0:
            continue
        key = tuple(sorted(comp))
        if key not in value_of:
            value_of[key] = theta_from_counts(np.array(key), n, family)
        v = value_of[key]
        by_value[v] = by_value.get(v, 0.0) + prob
    return sorted(by_value.items())


def exact_tail_probability(pmf, center: float, t: float) -> float:
    """``P(|theta_hat - center| > t)`` under an exact pmf."""
    return math.fsum(q for v, q in pmf if abs(v - center) > t)


def clt_diagnostic(
    dist: CountableDistribution,
    family: IndexFamily,
    n: int,
    replicates: int,
    seed: int,
    *,
    studentize: bool = False,
    tol: float = 1e-10,
    threads: int = 1,
) -> float:
    """Kolmogorov-Smirnov distance of ``sqrt(n)(theta_hat - theta)/sigma`` to N(0, 1).

    With ``studentize`` the population ``sigma`` is replaced by each
    replicate's plug-in ``sigma_hat``.
    """
    s2 = population_sigma_sq(dist, family, tol)
    if s2 == 0:
        raise ValueError("population variance is zero; the normal limit does not apply")
    th = theta(family, dist, tol)
    est, var = simulate_plugin(dist, family, n, replicates, seed, threads=threads, with_sigma=True)
    if studentize:
        if np.any(var == 0):
            raise ValueError("a replicate has zero plug-in variance; cannot studentize")
        scale = np.sqrt(var)
    else:
        scale = math.sqrt(s2)
    z = math.sqrt(n) * (est - th) / scale
    return float(stats.kstest(z, "norm").statistic)


@dataclass(frozen=True)
class RemainderStats:
    max: float
    mean: float


def remainder_diagnostic(
    dist: CountableDistribution,
    family: IndexFamily,
    n: int,
    replicates: int,
    seed: int,
    scale: MdpScale,
    *,
    tol: float = 1e-12,
    threads: int = 1,
) -> RemainderStats:
    """Size of the linearization error of a Renyi or Hill transform.

    Per replicate ``R = T(h_hat) - T(h) - T'(h)(h_hat - h)`` is computed
    exactly and reported as ``sqrt(n) / b_n * |R|``.
    """
    if family.transform not in ("renyi", "hill"):
        raise ValueError("remainder diagnostic needs a renyi or hill transform")
    base = family.base
    h = theta(base, dist, tol)
    h_hat = simulate_plugin(dist, base, n, replicates, seed, threads=threads)
    rem = remainder(family, h, h_hat)
    scaled = math.sqrt(n) / scale(n) * np.abs(rem)
    return RemainderStats(float(scaled.max()), float(scaled.mean()))


def remainder(family: IndexFamily, h: float, h_hat):
    """First-order Taylor remainder of the family's transform at ``h``."""
    h_hat = np.asarray(h_hat, dtype=float)
    return family.apply(h_hat) - family.apply(h) - family.apply_prime(h) * (h_hat - h)
