import math

import numpy as np
import pytest
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from gazeflight.stats import (anderson_darling_normal, f_sf, one_way_anova,
                              q_critical, reg_inc_beta, studentized_range_cdf,
                              studentized_range_sf, t_sf_two_sided, t_test,
                              tukey_hsd)

import oracles


class TestDistributions:
    def test_t_cdf_against_numeric_integration(self):
        for df in (2, 5, 10, 30):
            for t in np.linspace(0.2, 4.0, 20):
                p_mine = t_sf_two_sided(float(t), df)
                assert p_mine == pytest.approx(
                    oracles.t_sf_two_sided_numeric(float(t), df), abs=2e-7)

    def test_f_sf_against_numeric_integration(self):
        for d1, d2 in ((1, 2), (2, 54), (3, 10)):
            for f in np.linspace(0.5, 8.0, 20):
                assert f_sf(float(f), d1, d2) == pytest.approx(
                    oracles.f_sf_numeric(float(f), d1, d2), abs=5e-6)

    def test_reg_inc_beta_bounds_and_symmetry(self):
        assert reg_inc_beta(2, 3, 0.0) == 0.0
        assert reg_inc_beta(2, 3, 1.0) == 1.0
        for x in (0.1, 0.35, 0.8):
            assert reg_inc_beta(2, 3, x) == pytest.approx(
                1 - reg_inc_beta(3, 2, 1 - x), abs=1e-12)

    def test_studentized_range_against_scipy(self):
        for q, k, df in ((2.0, 3, 10), (3.877, 3, 10), (3.0, 4, 20), (5.0, 3, 6)):
            mine = studentized_range_cdf(q, k, df)
            ref = ss.studentized_range.cdf(q, k, df)
            assert mine == pytest.approx(ref, abs=1e-4)

    def test_q_critical_matches_table(self):
        # standard table: q(0.05; k=3, df=10) = 3.88
        assert q_critical(0.05, 3, 10) == pytest.approx(3.88, abs=0.01)

    def test_tukey_p_monotone_in_q(self):
        ps = [studentized_range_sf(q, 3, 12) for q in (1.0, 2.0, 3.0, 4.5, 6.0)]
        assert ps == sorted(ps, reverse=True)
        assert all(0 <= p <= 1 for p in ps)


class TestAndersonDarling:
    def test_equispaced_normal_quantiles_accepted(self):
        sample = ss.norm.ppf((np.arange(1, 21) - 0.5) / 20)
        result = anderson_darling_normal(sample)
        assert not result.reject_at_0_05
        assert result.a2_stat == pytest.approx(oracles.anderson_darling_a2(sample),
                                               abs=1e-9)

    def test_gross_outlier_rejected(self):
        sample = [0.0] * 19 + [100.0]
        result = anderson_darling_normal(sample)
        assert result.reject_at_0_05
        assert result.a2_stat == pytest.approx(oracles.anderson_darling_a2(sample),
                                               abs=1e-9)

    def test_matches_scipy_statistic(self):
        rng = np.random.default_rng(17)
        sample = rng.normal(3, 2, size=40)
        assert anderson_darling_normal(sample).a2_stat == pytest.approx(
            ss.anderson(sample, "norm").statistic, abs=1e-9)

    @given(st.integers(0, 2000), st.floats(0.1, 50), st.floats(-100, 100))
    @settings(max_examples=50, deadline=None)
    def test_affine_invariance(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        sample = rng.normal(size=20)
        a = anderson_darling_normal(sample).a2_stat
        b = anderson_darling_normal(scale * sample + shift).a2_stat
        assert a == pytest.approx(b, abs=1e-9)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            anderson_darling_normal([1.0] * 7)
        with pytest.raises(ValueError):
            anderson_darling_normal([2.0] * 10)


class TestAnova:
    def test_identical_groups_zero_f(self):
        r = one_way_anova([[1, 2, 3], [1, 2, 3], [1, 2, 3]])
        assert r.f_stat == 0.0 and r.eta_squared == 0.0
        assert r.p_value == 1.0

    def test_hand_worked_sums(self):
        r = one_way_anova([[1, 2], [3, 4]])
        assert r.f_stat == pytest.approx(8.0)
        assert (r.df_between, r.df_within) == (1, 2)
        assert r.eta_squared == pytest.approx(0.8)

    def test_paper_effect_size_recovered_by_construction(self):
        # three groups synthesized so SSB/SST hits the published 0.7181
        rng = np.random.default_rng(5)
        target = 0.7181
        base = rng.normal(0, 1, size=(3, 19))
        base = base - base.mean(axis=1, keepdims=True)
        ssw = float((base ** 2).sum())
        offsets = np.array([-1.0, 0.0, 1.0])
        # choose the group separation c so that SSB = target/(1-target) * SSW
        ssb_unit = float((19 * offsets ** 2).sum())
        c = math.sqrt(target / (1 - target) * ssw / ssb_unit)
        groups = base + c * offsets[:, None]
        r = one_way_anova(groups.tolist())
        assert r.eta_squared == pytest.approx(target, abs=1e-9)

    def test_matches_scipy(self):
        rng = np.random.default_rng(23)
        groups = [rng.normal(loc, 1.0, size=n).tolist()
                  for loc, n in ((0.0, 10), (0.5, 8), (1.2, 4))]
        r = one_way_anova(groups)
        ref = ss.f_oneway(*groups)
        assert r.f_stat == pytest.approx(ref.statistic, rel=1e-12)
        assert r.p_value == pytest.approx(ref.pvalue, abs=1e-9)

    def test_degenerate_within_variance(self):
        r = one_way_anova([[1.0, 1.0], [2.0, 2.0]])
        assert math.isinf(r.f_stat) and r.p_value == 0.0 and r.eta_squared == 1.0
        r0 = one_way_anova([[1.0, 1.0], [1.0, 1.0]])
        assert r0.f_stat == 0.0 and r0.p_value == 1.0

    def test_preconditions(self):
        with pytest.raises(ValueError):
            one_way_anova([[1, 2]])
        with pytest.raises(ValueError):
            one_way_anova([[1], [2, 3]])

    @given(st.integers(0, 5000), st.floats(-50, 50),
           st.floats(0.1, 20))
    @settings(max_examples=40, deadline=None)
    def test_shift_and_scale_invariance(self, seed, shift, scale):
        rng = np.random.default_rng(seed)
        groups = [rng.normal(rng.uniform(-2, 2), 1.0, size=int(rng.integers(3, 9)))
                  for _ in range(3)]
        r1 = one_way_anova([g.tolist() for g in groups])
        r2 = one_way_anova([(g + shift).tolist() for g in groups])
        r3 = one_way_anova([(g * scale).tolist() for g in groups])
        assert r1.f_stat == pytest.approx(r2.f_stat, rel=1e-6)
        assert r1.eta_squared == pytest.approx(r2.eta_squared, rel=1e-6)
        assert r1.eta_squared == pytest.approx(r3.eta_squared, rel=1e-6)

    @given(st.integers(0, 5000))
    @settings(max_examples=50, deadline=None)
    def test_f_equals_t_squared_for_two_groups(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(0, 1, size=int(rng.integers(3, 12))).tolist()
        b = rng.normal(0.8, 1.4, size=int(rng.integers(3, 12))).tolist()
        f = one_way_anova([a, b]).f_stat
        t = t_test(a, b, variant="pooled").t_stat
        assert f == pytest.approx(t * t, rel=1e-9)


class TestTukey:
    def test_equal_means_p_one(self):
        r = tukey_hsd([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [2.0, 1.0, 3.0]])
        for pair in r.pairs:
            assert pair.q_stat == pytest.approx(0.0)
            assert pair.p_value == pytest.approx(1.0, abs=1e-9)
            assert not pair.significant

    def test_separated_pairs_flagged(self):
        near_a = [0.0, 0.3, -0.2, 0.1]
        near_b = [0.1, 0.4, -0.1, 0.2]
        far = [10.0, 10.1, 9.9, 10.05]
        r = tukey_hsd([near_a, near_b, far])
        flags = {(p.group_a, p.group_b): p.significant for p in r.pairs}
        assert flags[(0, 2)] and flags[(1, 2)]
        assert not flags[(0, 1)]

    def test_matches_scipy_unbalanced(self):
        rng = np.random.default_rng(31)
        groups = [rng.normal(m, 1.0, size=n).tolist()
                  for m, n in ((0, 10), (1.0, 8), (2.0, 4))]
        mine = tukey_hsd(groups)
        ref = ss.tukey_hsd(*groups)
        for pair in mine.pairs:
            assert pair.p_value == pytest.approx(
                ref.pvalue[pair.group_a, pair.group_b], abs=2e-4)


class TestTTest:
    def test_identical_samples(self):
        r = t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.t_stat == 0.0 and r.p_value == pytest.approx(1.0) and r.cohens_d == 0.0

    def test_hand_worked_cohens_d(self):
        r = t_test([1, 2, 3, 4], [3, 4, 5, 6])
        assert abs(r.cohens_d) == pytest.approx(2 / 1.29099, abs=1e-4)
        assert r.df == 6

    def test_sign_flip_antisymmetry(self):
        r1 = t_test([1, 2, 3, 4], [3, 4, 5, 6])
        r2 = t_test([3, 4, 5, 6], [1, 2, 3, 4])
        assert r1.t_stat == pytest.approx(-r2.t_stat)
        assert r1.cohens_d == pytest.approx(-r2.cohens_d)
        assert r1.p_value == pytest.approx(r2.p_value)

    def test_matches_scipy_both_variants(self):
        rng = np.random.default_rng(13)
        a = rng.normal(0, 1, size=9).tolist()
        b = rng.normal(1, 2, size=14).tolist()
        pooled = t_test(a, b, "pooled")
        ref_p = ss.ttest_ind(a, b, equal_var=True)
        assert pooled.t_stat == pytest.approx(ref_p.statistic, rel=1e-12)
        assert pooled.p_value == pytest.approx(ref_p.pvalue, abs=1e-12)
        welch = t_test(a, b, "welch")
        ref_w = ss.ttest_ind(a, b, equal_var=False)
        assert welch.t_stat == pytest.approx(ref_w.statistic, rel=1e-12)
        assert welch.p_value == pytest.approx(ref_w.pvalue, abs=1e-12)
        assert welch.df == pytest.approx(ref_w.df, rel=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError, match="variance"):
            t_test([2.0, 2.0], [2.0, 2.0])

    def test_preconditions(self):
        with pytest.raises(ValueError):
            t_test([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            t_test([1.0, 2.0], [3.0, 4.0], variant="bogus")
