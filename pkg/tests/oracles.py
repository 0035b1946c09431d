"""Independent reference computations used by several test modules.

Nothing here imports the package: every value is computed from first
principles with plain numpy/math so that it can check the library.
"""

import math

import numpy as np

ZETA2 = math.pi ** 2 / 6.0
BRUTE_TERMS = 10 ** 7


def zeta_masses(s=2.0, terms=BRUTE_TERMS):
    i = np.arange(1, terms + 1, dtype=float)
    w = i ** (-s)
    if s == 2.0:
        return w / ZETA2
    return w / math.fsum(w)


def brute_power_sums(p, powers):
    """``{k: sum p^k}`` by compensated summation over 10^6-term chunks."""
    out = {}
    for k in powers:
        parts = [float(np.sum(p[j:j + 10 ** 6] ** k)) for j in range(0, len(p), 10 ** 6)]
        out[k] = math.fsum(parts)
    return out


def simpson_sigma_sq_brute(p):
    s = brute_power_sums(p, (2, 3))
    return 4.0 * (s[3] - s[2] ** 2), s


def two_point_sigma_sq(gamma, n):
    return n ** (-2 * gamma) - n ** (-4 * gamma)


def shrinking_geometric_sigma_sq(alpha, n):
    a = n ** alpha
    return 4 * a * (a - 1) ** 2 / ((a * a + a + 1) * (a + 1) ** 2)


def finite_difference(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)
