import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from diversity_mdp import (
    Custom,
    Finite,
    Geometric,
    TwoPointPerturbed,
    Zeta,
    mass,
    sample_counts,
    shrinking_geometric_family,
    tail_mass_bound,
    two_point_family,
)
from diversity_mdp.distributions import load_weights_csv

from oracles import ZETA2


class TestFinite:
    def test_normalizes_within_slack(self):
        d = Finite([0.5, 0.25, 0.25 + 1e-12])
        assert math.isclose(math.fsum(d.masses(1, 4)), 1.0, abs_tol=1e-15)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            Finite([0.5, 0.6])

    @pytest.mark.parametrize("weights", [[-0.1, 1.1], [math.nan, 1.0], [math.inf, 0.0]])
    def test_rejects_bad_weights(self, weights):
        with pytest.raises(ValueError):
            Finite(weights)

    def test_mass_beyond_support_is_zero(self):
        d = Finite([0.6, 0.3, 0.1])
        assert d.mass(3) == 0.1
        assert d.mass(4) == 0.0
        assert d.tail_mass_bound(3) == 0.0

    def test_mass_rejects_nonpositive_letter(self):
        with pytest.raises(ValueError):
            mass(Finite([1.0]), 0)


class TestZeta:
    def test_first_mass(self):
        assert mass(Zeta(2), 1) == pytest.approx(1 / ZETA2, rel=1e-15)

    def test_survival_matches_partial_sums(self):
        d = Zeta(2)
        p = d.masses(1, 100001)
        for N in (1, 10, 1000, 100000):
            assert d.survival(N) == pytest.approx(1 - math.fsum(p[:N]), abs=1e-13)

    @given(st.integers(1, 10 ** 6), st.floats(1.2, 4.0))
    @settings(max_examples=50, deadline=None)
    def test_tail_bound_dominates_survival(self, N, s):
        d = Zeta(s)
        assert tail_mass_bound(d, N) >= d.survival(N) * (1 - 1e-12)

    @given(st.integers(1, 10 ** 6), st.integers(1, 10 ** 6), st.floats(1.2, 4.0))
    @settings(max_examples=50, deadline=None)
    def test_tail_bound_monotone(self, a, b, s):
        d = Zeta(s)
        lo, hi = sorted((a, b))
        assert tail_mass_bound(d, hi) <= tail_mass_bound(d, lo)

    def test_rejects_s_at_most_one(self):
        with pytest.raises(ValueError):
            Zeta(1.0)


class TestGeometric:
    def test_masses_and_survival(self):
        d = Geometric(0.25)
        p = d.masses(1, 6)
        np.testing.assert_allclose(p, 0.25 * 0.75 ** np.arange(5), rtol=1e-15)
        assert d.survival(5) == pytest.approx(0.75 ** 5, rel=1e-14)
        assert d.tail_mass_bound(5) >= d.survival(5)

    def test_ratio_parametrization(self):
        d = Geometric(ratio=1e-3)
        assert d.mass(1) == pytest.approx(1 - 1e-3)
        assert d.mass(2) == pytest.approx((1 - 1e-3) * 1e-3)

    @pytest.mark.parametrize("q", [0.0, 1.5, -0.1])
    def test_rejects_bad_q(self, q):
        with pytest.raises(ValueError):
            Geometric(q)


class TestTwoPoint:
    def test_masses(self):
        d = TwoPointPerturbed(0.25, 10 ** 4)
        assert d.mass(1) == pytest.approx(0.55)
        assert d.mass(2) == pytest.approx(0.45)
        assert d.mass(3) == 0.0

    @pytest.mark.parametrize("gamma", [0.0, 0.5, 0.7])
    def test_rejects_gamma(self, gamma):
        with pytest.raises(ValueError):
            TwoPointPerturbed(gamma, 100)

    def test_family_caches_members(self):
        fam = two_point_family(0.1)
        assert fam(100) is fam(100)
        assert fam(100).mass(1) > fam(10 ** 4).mass(1)

    def test_shrinking_geometric_family(self):
        fam = shrinking_geometric_family(0.5)
        assert fam(100).mass(1) == pytest.approx(1 - 0.1)
        with pytest.raises(ValueError):
            shrinking_geometric_family(1.0)


class TestSampling:
    def test_counts_sum_to_n(self):
        s = sample_counts(Zeta(2), 5000, seed=1)
        assert s.n == 5000
        assert sum(s.counts.values()) == 5000

    def test_same_seed_same_counts(self):
        a = sample_counts(Zeta(1.5), 2000, seed=7)
        b = sample_counts(Zeta(1.5), 2000, seed=7)
        assert dict(a.counts) == dict(b.counts)

    def test_geometric_frequency(self):
        s = sample_counts(Geometric(0.5), 10 ** 6, seed=0)
        assert s.counts[1] / 1e6 == pytest.approx(0.5, abs=5 * math.sqrt(0.25 / 1e6))

    def test_zeta_goodness_of_fit(self):
        # cells: letters 1..20, 21..1024, 1025..5000 (cached tail), > 5000 (deep)
        d = Zeta(2)
        n = 400000
        counts = sample_counts(d, n, seed=11).counts
        edges = [(i, i) for i in range(1, 21)] + [(21, 1024), (1025, 5000)]
        observed = [sum(c for k, c in counts.items() if lo <= k <= hi) for lo, hi in edges]
        observed.append(n - sum(observed))
        probs = [d.survival(lo - 1) - d.survival(hi) for lo, hi in edges]
        probs.append(d.survival(5000))
        chi2 = sum((o - n * p) ** 2 / (n * p) for o, p in zip(observed, probs))
        assert stats.chi2.sf(chi2, len(probs) - 1) > 1e-3

    def test_deep_letter_inverts_survival(self):
        d = Zeta(2)
        d._head_split()
        for target in (1e-7, 3.3e-9, 1e-12):
            j = d._deep_letter(5000, target)
            assert d.survival(j) < target <= d.survival(j - 1)

    def test_custom_without_survival_samples(self):
        # Zeta(3) masses with no closed-form survival supplied
        norm = 1.2020569031595942
        d = Custom(lambda i: np.asarray(i, dtype=float) ** -3 / norm, lambda N: N ** -2.0 / (2 * norm))
        s = sample_counts(d, 20000, seed=2)
        assert s.counts[1] / 2e4 == pytest.approx(1 / norm, abs=0.02)

    def test_finite_sampling_never_leaves_support(self):
        s = sample_counts(Finite([0.2] * 5), 10000, seed=3)
        assert set(s.counts) <= {1, 2, 3, 4, 5}


class TestWeightsCsv:
    def test_header_optional(self, tmp_path):
        f = tmp_path / "w.csv"
        f.write_text("label,weight\nA,0.25\nB,0.75\n")
        d, labels = load_weights_csv(f)
        assert labels == ["A", "B"]
        assert d.mass(2) == 0.75

    def test_unnormalized_rejected(self, tmp_path):
        f = tmp_path / "w.csv"
        f.write_text("A,1\nB,3\n")
        with pytest.raises(ValueError, match="sum"):
            load_weights_csv(f)

    def test_bad_row_names_line(self, tmp_path):
        f = tmp_path / "w.csv"
        f.write_text("A,0.5\nB,x\n")
        with pytest.raises(ValueError, match=":2:"):
            load_weights_csv(f)
