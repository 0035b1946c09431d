"""Probability mass functions on the positive integers.

Letters are identified by their 1-based index.  Every distribution exposes
its masses, an upper bound on the mass beyond a truncation point, and an
exact sampler for count vectors.  Sampling never truncates the support: the
first ``head`` letters are drawn with a multinomial split and the remaining
draws are resolved by inverting the conditional tail CDF, whose prefix sums
are cached and extended on demand.
"""

from __future__ import annotations

import csv
import math
import threading
from collections.abc import Callable, Sequence

import numpy as np
from scipy import special

__all__ = [
    "CountableDistribution",
    "Finite",
    "Geometric",
    "Zeta",
    "TwoPointPerturbed",
    "Custom",
    "TriangularFamily",
    "two_point_family",
    "shrinking_geometric_family",
    "fixed_family",
    "mass",
    "tail_mass_bound",
    "sample_counts",
    "load_weights_csv",
]

HEAD_SIZE = 1024
# canonical block size for the tail prefix-sum cache; never depends on draws
_BLOCK = 4096
_CACHE_CAP = 1 << 22
_NORMALIZE_SLACK = 1e-9


class _TailTable:
    """Prefix sums of the masses of letters ``start+1, start+2, ...``.

    The table grows in fixed blocks, each computed from the previous block's
    last value, so the cached values are independent of the order in which
    samplers request extensions.
    """

    def __init__(self, dist: CountableDistribution, start: int):
        self._dist = dist
        self.start = start
        self._buf = np.empty(_BLOCK)
        self._len = 0
        self._lock = threading.Lock()

    @property
    def values(self) -> np.ndarray:
        # readers hold a view of the filled prefix; later writes go past it
        return self._buf[: self._len]

    def exhausted(self) -> bool:
        size = self._dist.support_size
        return size is not None and self.start + self._len >= size

    def extend(self) -> np.ndarray:
        """Append one block and return the new snapshot."""
        with self._lock:
            n = self._len
            lo = self.start + n + 1
            hi = lo + _BLOCK
            size = self._dist.support_size
            if size is not None:
                hi = min(hi, size + 1)
            if hi <= lo:
                return self.values
            block = np.cumsum(self._dist.masses(lo, hi))
            if n:
                block += self._buf[n - 1]
            if n + len(block) > len(self._buf):
                grown = np.empty(2 * len(self._buf) + len(block))
                grown[:n] = self._buf[:n]
                self._buf = grown
            self._buf[n:n + len(block)] = block
            self._len = n + len(block)
            return self.values


class CountableDistribution:
    """Base class for a pmf ``p_1, p_2, ...`` on the positive integers.

    Subclasses implement :meth:`masses` and :meth:`tail_mass_bound`;
    :meth:`survival` is optional and enables exact deep-tail inversion.
    """

    kind = "abstract"
    support_size: int | None = None

    def __init__(self):
        self._sampler_lock = threading.Lock()
        self._head: tuple[np.ndarray, float] | None = None
        self._table: _TailTable | None = None

    # -- evaluation -------------------------------------------------------
    def masses(self, start: int, stop: int) -> np.ndarray:
        """Masses of letters ``start, ..., stop - 1`` (1-based)."""
        raise NotImplementedError

    def mass(self, i: int) -> float:
        if i < 1:
            raise ValueError(f"letters are positive integers, got {i}")
        if self.support_size is not None and i > self.support_size:
            return 0.0
        return float(self.masses(i, i + 1)[0])

    def tail_mass_bound(self, N: int) -> float:
        raise NotImplementedError

    def survival(self, N: int) -> float | None:
        """Exact ``sum_{i > N} p_i`` when a closed form exists, else None."""
        return None

    # -- sampling ---------------------------------------------------------
    def _head_split(self) -> tuple[np.ndarray, float]:
        if self._head is None:
            with self._sampler_lock:
                if self._head is None:
                    h = HEAD_SIZE if self.support_size is None else min(HEAD_SIZE, self.support_size)
                    head = self.masses(1, h + 1)
                    if self.support_size is not None and h == self.support_size:
                        rest = 0.0
                    else:
                        rest = self.survival(h)
                        if rest is None:
                            rest = max(0.0, 1.0 - math.fsum(head))
                    self._table = _TailTable(self, h)
                    self._head = (head, rest)
        return self._head

    def _tail_letters(self, u: np.ndarray) -> np.ndarray:
        head, rest = self._head_split()
        table = self._table
        start = table.start
        cum = table.values
        finite = self.support_size is not None
        if finite:
            while not table.exhausted():
                cum = table.extend()
            total = cum[-1]
        else:
            total = rest
        targets = u * total
        need = float(targets.max())
        while (len(cum) == 0 or cum[-1] <= need) and len(cum) < _CACHE_CAP and not table.exhausted():
            cum = table.extend()
        letters = start + 1 + np.searchsorted(cum, targets, side="right")
        deep = np.flatnonzero(targets >= cum[-1]) if len(cum) else np.arange(len(u))
        if len(deep):
            if finite:
                # rounding at the very top of a finite support
                letters[deep] = start + len(cum)
            else:
                for k in deep:
                    letters[k] = self._deep_letter(start + len(cum), (1.0 - u[k]) * rest)
        return letters

    def _deep_letter(self, first: int, target: float) -> int:
        """Smallest letter ``j > first`` with ``survival(j) < target``."""
        if self.survival(first) is None:
            # no closed form: keep scanning masses beyond the cache
            acc = self.survival_from_table(first)
            j = first
            while True:
                block = self.masses(j + 1, j + 1 + _BLOCK)
                for m in block:
                    j += 1
                    acc -= m
                    if acc < target:
                        return j
                if j > first + (1 << 28):
                    raise RuntimeError("tail inversion did not terminate; masses do not sum to one")
        lo, hi = first, 2 * first
        while self.survival(hi) >= target:
            lo, hi = hi, 2 * hi
            if hi > 1 << 62:
                return hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.survival(mid) < target:
                hi = mid
            else:
                lo = mid
        return hi

    def survival_from_table(self, upto: int) -> float:
        _, rest = self._head_split()
        cum = self._table.values
        k = upto - self._table.start
        return rest - (cum[k - 1] if k > 0 else 0.0)

    def draw(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Head counts (letters ``1..H``) and the letters of the tail draws."""
        head, rest = self._head_split()
        if rest > 0.0:
            pvals = np.append(head, rest)
        else:
            pvals = head
        counts = rng.multinomial(n, pvals)
        if rest > 0.0:
            m = int(counts[-1])
            counts = counts[:-1]
            if m:
                return counts, self._tail_letters(rng.random(m))
        return counts, np.empty(0, dtype=np.int64)

    def count_vector(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Nonzero letter counts of an i.i.d. sample of size ``n``, identity dropped."""
        head, tail = self.draw(n, rng)
        nz = head[head > 0]
        if len(tail) == 0:
            return nz
        _, tail_counts = np.unique(tail, return_counts=True)
        return np.concatenate([nz, tail_counts])

    def sample_counts(self, n: int, rng: np.random.Generator) -> dict[int, int]:
        head, tail = self.draw(n, rng)
        out = {int(i) + 1: int(c) for i, c in enumerate(head) if c}
        if len(tail):
            letters, tail_counts = np.unique(tail, return_counts=True)
            out.update({int(a): int(c) for a, c in zip(letters, tail_counts)})
        return out


class Finite(CountableDistribution):
    """Weights on letters ``1..K``, normalized on construction."""

    kind = "finite"

    def __init__(self, weights: Sequence[float]):
        super().__init__()
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-D sequence")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        total = math.fsum(w)
        if abs(total - 1.0) > _NORMALIZE_SLACK:
            raise ValueError(f"weights sum to {total!r}, not 1 within {_NORMALIZE_SLACK}")
        self.weights = w / total
        self.support_size = int(w.size)

    def masses(self, start, stop):
        return _slice_finite(self.weights, start, stop)

    def tail_mass_bound(self, N):
        if N >= self.support_size:
            return 0.0
        return math.fsum(self.weights[N:])

    def survival(self, N):
        return self.tail_mass_bound(N)

    def __repr__(self):
        return f"Finite({self.weights.tolist()!r})"


class Geometric(CountableDistribution):
    """``p_i = (1 - q)^(i-1) q``.

    ``ratio`` (``1 - q``) may be given instead of ``q`` when ``q`` is close
    to one and ``1 - q`` is known more accurately than ``q``.
    """

    kind = "geometric"

    def __init__(self, q: float | None = None, *, ratio: float | None = None):
        super().__init__()
        if (q is None) == (ratio is None):
            raise ValueError("give exactly one of q or ratio")
        if ratio is None:
            ratio = 1.0 - q
        else:
            q = 1.0 - ratio
        if not (0.0 < q < 1.0 and 0.0 < ratio < 1.0):
            raise ValueError(f"q must lie in (0, 1), got {q!r}")
        self.q = float(q)
        self.ratio = float(ratio)
        self._log_ratio = math.log(self.ratio)

    def masses(self, start, stop):
        i = np.arange(start, stop, dtype=float)
        return self.q * np.exp((i - 1.0) * self._log_ratio)

    def tail_mass_bound(self, N):
        return math.exp(N * self._log_ratio)

    def survival(self, N):
        return self.tail_mass_bound(N)

    def __repr__(self):
        return f"Geometric(q={self.q!r})"


class Zeta(CountableDistribution):
    """``p_i = i^(-s) / zeta(s)`` for ``s > 1``."""

    kind = "zeta"

    def __init__(self, s: float):
        super().__init__()
        if not s > 1.0:
            raise ValueError(f"zeta exponent must exceed 1, got {s!r}")
        self.s = float(s)
        self.norm = 1.0 / float(special.zeta(self.s))

    def masses(self, start, stop):
        i = np.arange(start, stop, dtype=float)
        return self.norm * i ** (-self.s)

    def tail_mass_bound(self, N):
        # integral comparison: sum_{i>N} i^-s <= N^(1-s) / (s-1)
        return self.norm * N ** (1.0 - self.s) / (self.s - 1.0)

    def survival(self, N):
        return self.norm * float(special.zeta(self.s, N + 1.0))

    def __repr__(self):
        return f"Zeta(s={self.s!r})"


class TwoPointPerturbed(CountableDistribution):
    """Two letters with masses ``1/2 +- 1/(2 n^gamma)``, for ``gamma`` in (0, 1/2)."""

    kind = "two_point_perturbed"
    support_size = 2

    def __init__(self, gamma: float, n: int):
        super().__init__()
        if not 0.0 < gamma < 0.5:
            raise ValueError(f"gamma must lie in (0, 1/2), got {gamma!r}")
        if int(n) != n or n < 1:
            raise ValueError(f"n must be a positive integer, got {n!r}")
        self.gamma = float(gamma)
        self.n = int(n)
        self.p1 = 0.5 + 0.5 * self.n ** (-self.gamma)
        self.p2 = 1.0 - self.p1

    def masses(self, start, stop):
        return _slice_finite(np.array([self.p1, self.p2]), start, stop)

    def tail_mass_bound(self, N):
        if N >= 2:
            return 0.0
        return self.p2 if N == 1 else 1.0

    def survival(self, N):
        return self.tail_mass_bound(N)

    def __repr__(self):
        return f"TwoPointPerturbed(gamma={self.gamma!r}, n={self.n!r})"


def _slice_finite(weights, start, stop):
    out = np.zeros(max(stop - start, 0))
    lo, hi = max(start, 1), min(stop, len(weights) + 1)
    if hi > lo:
        out[lo - start:hi - start] = weights[lo - 1:hi - 1]
    return out


class Custom(CountableDistribution):
    """A pmf given by a mass function and a tail bound.

    ``mass_fn`` maps a 1-based letter to its probability.  For infinite
    support ``tail_bound_fn`` is required; ``survival_fn`` is optional.
    """

    kind = "custom"

    def __init__(
        self,
        mass_fn: Callable[[int], float],
        tail_bound_fn: Callable[[int], float] | None = None,
        *,
        support_size: int | None = None,
        survival_fn: Callable[[int], float] | None = None,
    ):
        super().__init__()
        if support_size is None and tail_bound_fn is None:
            raise ValueError("infinite support needs a tail bound")
        self._mass_fn = mass_fn
        self._tail_bound_fn = tail_bound_fn
        self._survival_fn = survival_fn
        self.support_size = support_size

    def masses(self, start, stop):
        hi = stop if self.support_size is None else min(stop, self.support_size + 1)
        out = np.zeros(max(stop - start, 0))
        for i in range(start, hi):
            out[i - start] = self._mass_fn(i)
        return out

    def tail_mass_bound(self, N):
        if self.support_size is not None and N >= self.support_size:
            return 0.0
        if self._tail_bound_fn is None:
            return math.fsum(self.masses(N + 1, self.support_size + 1))
        return float(self._tail_bound_fn(N))

    def survival(self, N):
        if self._survival_fn is None:
            return None
        return float(self._survival_fn(N))


class TriangularFamily:
    """A sequence of distributions indexed by the sample size ``n``."""

    def __init__(self, generator: Callable[[int], CountableDistribution], name: str = "custom"):
        self._generator = generator
        self.name = name
        self._cache: dict[int, CountableDistribution] = {}
        self._lock = threading.Lock()

    def __call__(self, n: int) -> CountableDistribution:
        with self._lock:
            dist = self._cache.get(n)
            if dist is None:
                dist = self._cache[n] = self._generator(n)
        return dist

    def __repr__(self):
        return f"TriangularFamily({self.name})"


def two_point_family(gamma: float) -> TriangularFamily:
    """``n -> TwoPointPerturbed(gamma, n)``: approaches the fair coin."""
    if not 0.0 < gamma < 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2), got {gamma!r}")
    return TriangularFamily(lambda n: TwoPointPerturbed(gamma, n), f"two_point_perturbed(gamma={gamma})")


def shrinking_geometric_family(alpha: float) -> TriangularFamily:
    """``n -> Geometric(q = 1 - n^-alpha)`` for ``alpha`` in (0, 1); needs ``n >= 2``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")

    def make(n):
        if n < 2:
            raise ValueError("shrinking geometric family needs n >= 2")
        return Geometric(ratio=float(n) ** (-alpha))

    return TriangularFamily(make, f"shrinking_geometric(alpha={alpha})")


def fixed_family(dist: CountableDistribution) -> TriangularFamily:
    return TriangularFamily(lambda n: dist, repr(dist))


def mass(dist: CountableDistribution, i: int) -> float:
    return dist.mass(i)


def tail_mass_bound(dist: CountableDistribution, N: int) -> float:
    """Upper bound on ``sum_{i > N} p_i``; monotone nonincreasing in ``N``."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return dist.tail_mass_bound(N)


def sample_counts(dist: CountableDistribution, n: int, seed=None):
    """Draw an i.i.d. sample of size ``n`` and return its counts.

    Parameters
    ----------
    dist : CountableDistribution
    n : int
        Sample size, at least 1.
    seed : int, SeedSequence or Generator, optional
        Anything accepted by :func:`numpy.random.default_rng`.

    Returns
    -------
    EmpiricalSample
    """
    from .estimation import EmpiricalSample

    if int(n) != n or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    return EmpiricalSample(int(n), dist.sample_counts(int(n), rng))


def load_weights_csv(path) -> tuple[Finite, list[str]]:
    """Read ``label,weight`` rows (header optional) into a Finite distribution."""
    labels, weights = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'label,weight', got {row!r}")
            try:
                w = float(row[1])
            except ValueError:
                if lineno == 1 and not labels:
                    continue
                raise ValueError(f"{path}:{lineno}: weight {row[1]!r} is not a number") from None
            labels.append(row[0].strip())
            weights.append(w)
    if not weights:
        raise ValueError(f"{path}: no weight rows")
    return Finite(weights), labels
