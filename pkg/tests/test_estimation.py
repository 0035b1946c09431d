import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diversity_mdp import (
    DegenerateVarianceError,
    EmpiricalSample,
    Finite,
    Geometric,
    IndexFamily,
    TwoPointPerturbed,
    Zeta,
    confidence_interval,
    estimate,
    plugin_sigma_sq,
    plugin_theta,
    population_sigma_sq,
)
from diversity_mdp.estimation import VARIANCE_CLAMP, _clamp, sigma_sq_from_counts
from diversity_mdp.montecarlo import exact_plugin_distribution

from oracles import shrinking_geometric_sigma_sq, simpson_sigma_sq_brute, two_point_sigma_sq, zeta_masses


class TestEmpiricalSample:
    def test_from_counts_drops_zeros(self):
        s = EmpiricalSample.from_counts({1: 3, 2: 0, 5: 1})
        assert s.n == 4
        assert dict(s.counts) == {1: 3, 5: 1}

    def test_sequence_input(self):
        assert EmpiricalSample(4, [3, 1]).n == 4

    def test_sum_must_match_n(self):
        with pytest.raises(ValueError):
            EmpiricalSample(5, {1: 3, 2: 1})

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            EmpiricalSample(2, {1: 3, 2: -1})


class TestPlugin:
    def test_simpson_three_one(self):
        s = EmpiricalSample.from_counts({1: 3, 2: 1})
        assert plugin_theta(s, IndexFamily.simpson()) == 0.625
        # 4 * (sum p^3 - (sum p^2)^2) = 4 * (28/64 - 25/64)
        assert plugin_sigma_sq(s, IndexFamily.simpson()) == pytest.approx(0.1875, abs=1e-15)

    def test_single_letter(self):
        s = EmpiricalSample.from_counts({1: 4})
        assert plugin_theta(s, IndexFamily.simpson()) == 1.0
        assert plugin_sigma_sq(s, IndexFamily.simpson()) == 0.0

    def test_transform_delta_method(self):
        s = EmpiricalSample.from_counts({1: 5, 2: 3, 3: 2})
        base = plugin_sigma_sq(s, IndexFamily(2.0))
        h = plugin_theta(s, IndexFamily(2.0))
        assert plugin_theta(s, IndexFamily(2.0, 0.0, "renyi")) == pytest.approx(-math.log(h))
        assert plugin_sigma_sq(s, IndexFamily(2.0, 0.0, "hill")) == pytest.approx(base / h ** 4)

    @given(st.lists(st.integers(0, 50), min_size=1, max_size=12).filter(lambda c: sum(c) > 0))
    @settings(max_examples=200, deadline=None)
    def test_variance_nonnegative(self, counts):
        s = EmpiricalSample(sum(counts), counts)
        for f in (IndexFamily.simpson(), IndexFamily(1.5, 2.0), IndexFamily(3.0, 1.0)):
            assert plugin_sigma_sq(s, f) >= 0.0

    @given(st.lists(st.integers(1, 30), min_size=1, max_size=8), st.randoms())
    @settings(max_examples=100, deadline=None)
    def test_invariant_under_relabeling(self, counts, rnd):
        shuffled = counts[:]
        rnd.shuffle(shuffled)
        f = IndexFamily(2.0, 1.0)
        a = EmpiricalSample(sum(counts), counts)
        b = EmpiricalSample(sum(counts), {10 * i + 7: c for i, c in enumerate(shuffled)})
        assert plugin_theta(a, f) == pytest.approx(plugin_theta(b, f), abs=1e-15)

    def test_unbiasedness_correction(self):
        # E[sum p_hat^2] = sum p^2 + (1 - sum p^2) / n, checked exactly by enumeration
        p = np.array([0.6, 0.3, 0.1])
        n = 5
        pmf = exact_plugin_distribution(Finite(p), IndexFamily.simpson(), n)
        mean = math.fsum(v * q for v, q in pmf)
        s2 = float(np.sum(p ** 2))
        assert mean == pytest.approx(s2 + (1 - s2) / n, abs=1e-14)


class TestClamp:
    def test_snaps_both_signs(self):
        assert _clamp(VARIANCE_CLAMP / 2) == 0.0
        assert _clamp(-VARIANCE_CLAMP / 2) == 0.0
        assert _clamp(1e-6) == 1e-6

    def test_large_negative_is_an_error(self):
        with pytest.raises(ArithmeticError):
            _clamp(-1e-6)


class TestPopulationVariance:
    def test_zeta2_simpson(self):
        assert population_sigma_sq(Zeta(2), IndexFamily.simpson(), 1e-12) == pytest.approx(48 / 175, abs=1e-12)

    def test_zeta2_brute_force(self):
        brute, _ = simpson_sigma_sq_brute(zeta_masses())
        assert population_sigma_sq(Zeta(2), IndexFamily.simpson()) == pytest.approx(brute, abs=1e-12)

    @pytest.mark.parametrize("gamma", [0.1, 0.25, 0.4])
    @pytest.mark.parametrize("n", [100, 10 ** 4])
    def test_two_point(self, gamma, n):
        got = population_sigma_sq(TwoPointPerturbed(gamma, n), IndexFamily.simpson())
        assert got == pytest.approx(two_point_sigma_sq(gamma, n), abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 0.6])
    @pytest.mark.parametrize("n", [100, 10 ** 4])
    def test_shrinking_geometric(self, alpha, n):
        r = n ** -alpha
        q = 1 - r
        # geometric-series sums of p^2 and p^3
        series = 4 * (q ** 3 / (1 - r ** 3) - (q ** 2 / (1 - r ** 2)) ** 2)
        assert shrinking_geometric_sigma_sq(alpha, n) == pytest.approx(series, rel=1e-12)
        got = population_sigma_sq(Geometric(ratio=r), IndexFamily.simpson())
        assert got == pytest.approx(series, abs=1e-10)

    @pytest.mark.parametrize("K", [2, 5, 10])
    def test_uniform_is_degenerate(self, K):
        d = Finite([1.0 / K] * K)
        assert population_sigma_sq(d, IndexFamily.simpson()) == 0.0
        assert population_sigma_sq(d, IndexFamily(3.0, 1.0)) == 0.0

    def test_plugin_converges_to_population(self):
        # plug-in variance at the population proportions is the population value
        p = [0.5, 0.3, 0.2]
        f = IndexFamily(2.0, 1.0)
        counts = np.array(p) * 1000
        assert sigma_sq_from_counts(counts, 1000, f) == pytest.approx(population_sigma_sq(Finite(p), f), abs=1e-15)


class TestConfidenceInterval:
    def test_symmetric_about_estimate(self):
        s = EmpiricalSample.from_counts({1: 30, 2: 10, 3: 5})
        lo, hi = confidence_interval(s, IndexFamily.simpson(), 0.9)
        theta_hat = plugin_theta(s, IndexFamily.simpson())
        assert (lo + hi) / 2 == pytest.approx(theta_hat)
        half = 1.6448536269514722 * math.sqrt(plugin_sigma_sq(s, IndexFamily.simpson()) / 45)
        assert hi - theta_hat == pytest.approx(half, rel=1e-12)

    def test_three_one_interval(self):
        lo, hi = confidence_interval(EmpiricalSample.from_counts({1: 3, 2: 1}), IndexFamily.simpson())
        half = 1.959963984540054 * math.sqrt(0.1875) / 2
        assert lo == pytest.approx(0.625 - half, abs=1e-14)
        assert hi == pytest.approx(0.625 + half, abs=1e-14)

    @pytest.mark.parametrize("counts", [{1: 4}, {1: 5, 2: 5}, {1: 2, 2: 2, 3: 2, 4: 2}])
    def test_degenerate_raises(self, counts):
        s = EmpiricalSample.from_counts(counts)
        with pytest.raises(DegenerateVarianceError, match="normal asymptotics fail"):
            confidence_interval(s, IndexFamily.simpson())

    def test_estimate_omits_degenerate_interval(self):
        rep = estimate(EmpiricalSample.from_counts({1: 4}), IndexFamily.simpson())
        assert rep.as_dict() == {
            "theta_hat": 1.0,
            "sigma_hat_sq": 0.0,
            "n": 4,
            "ci_lower": None,
            "ci_upper": None,
            "level": None,
        }

    def test_level_validated(self):
        with pytest.raises(ValueError):
            confidence_interval(EmpiricalSample.from_counts({1: 3, 2: 1}), IndexFamily.simpson(), 1.0)
