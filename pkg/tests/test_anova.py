import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rankcov.anova import anova_rank_test, anova_rank_test_contaminated, linear_rank_statistic
from rankcov.design import build_design
from rankcov.distributions import chisq_sf, normal, sample
from rankcov.errors import DegenerateScoreError, DimensionError, TieError
from rankcov.ranking import RankVector, TiePolicy, ranks
from rankcov.scores import ScoreVector, ScoreMode, ScoreKind, custom, scores_approximate, wilcoxon


def _design3():
    return build_design(np.array([1.0, 2.0, 3.0]))


class TestLinearRankStatistic:
    def test_hand_worked_instance(self):
        d = _design3()
        r = ranks([5.0, 1.0, 3.0])  # ranks 3,1,2
        a = scores_approximate(wilcoxon(), 3)
        s = linear_rank_statistic(d, r, a)
        assert s[0] == pytest.approx(-0.25 / np.sqrt(3))

    def test_constant_scores_give_zero(self):
        d = _design3()
        r = ranks([5.0, 1.0, 3.0])
        a = ScoreVector(np.full(3, 2.0), ScoreMode.APPROXIMATE, ScoreKind.CUSTOM)
        assert_allclose(linear_rank_statistic(d, r, a), [0.0], atol=1e-15)

    def test_matches_direct_sum_oracle(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(6, 2))
        d = build_design(x)
        y = rng.normal(size=6)
        r = ranks(y)
        a = scores_approximate(wilcoxon(), 6)
        # oracle: the definition, summed term by term
        xbar = x.mean(axis=0)
        oracle = sum(
            (x[i] - xbar) * a.values[int(r.ranks[i]) - 1] for i in range(6)
        ) / np.sqrt(6)
        assert_allclose(linear_rank_statistic(d, r, a), oracle, atol=1e-12)

    def test_length_mismatch(self):
        d = _design3()
        a = scores_approximate(wilcoxon(), 4)
        with pytest.raises(DimensionError):
            linear_rank_statistic(d, ranks([1.0, 2.0, 3.0, 4.0]), a)

    def test_permutation_mean_is_zero(self):
        d = build_design(np.array([0.3, 1.9, -2.0, 0.7, 1.1]))
        a = scores_approximate(wilcoxon(), 5)
        total = np.zeros(1)
        for perm in itertools.permutations(range(1, 6)):
            r = RankVector(np.array(perm, dtype=float), TiePolicy.error())
            total += linear_rank_statistic(d, r, a)
        assert abs(total[0]) < 1e-12


class TestAnovaRankTest:
    def test_hand_worked_statistic(self):
        res = anova_rank_test(_design3(), np.array([5.0, 1.0, 3.0]), wilcoxon())
        assert res.statistic == pytest.approx(0.375)
        assert res.df == 1
        assert res.p_asymptotic == pytest.approx(chisq_sf(0.375, 1))

    def test_monotone_transform_invariance_is_exact(self):
        rng = np.random.default_rng(1)
        d = build_design(rng.normal(size=(12, 2)))
        y = rng.normal(size=12)
        base = anova_rank_test(d, y, wilcoxon()).statistic
        for g in (np.exp, lambda v: v**3, lambda v: 2.0 * v + 5.0):
            assert anova_rank_test(d, g(y), wilcoxon()).statistic == base

    def test_affine_score_invariance(self):
        rng = np.random.default_rng(2)
        d = build_design(rng.normal(size=(10, 1)))
        y = rng.normal(size=10)
        base = anova_rank_test(d, y, wilcoxon()).statistic
        rescaled = custom(lambda t: 2.5 * t - 1.0, monotone=True)
        assert anova_rank_test(d, y, rescaled).statistic == pytest.approx(base, abs=1e-10)

    def test_degenerate_scores_error(self):
        d = _design3()
        flat = custom(lambda t: np.zeros_like(t) + 1.0, monotone=True)
        with pytest.raises(DegenerateScoreError):
            anova_rank_test(d, np.array([2.0, 0.0, 1.0]), flat)

    def test_tied_responses_follow_policy(self):
        d = build_design(np.array([1.0, 2.0, 3.0, 4.0]))
        y = np.array([1.0, 1.0, 2.0, 3.0])
        with pytest.raises(TieError):
            anova_rank_test(d, y, wilcoxon())
        res = anova_rank_test(d, y, wilcoxon(), ties=TiePolicy.midrank())
        assert res.diagnostics["tie_policy"] == "midrank"
        assert res.statistic >= 0

    def test_result_metadata(self):
        res = anova_rank_test(_design3(), np.array([5.0, 1.0, 3.0]), wilcoxon())
        assert res.method.value == "rank-anova"
        assert (res.n, res.p, res.q) == (3, 1, 0)
        assert res.score_kind == "wilcoxon"
        assert res.p_permutation is None


class TestContaminated:
    def test_zero_contamination_identical(self):
        rng = np.random.default_rng(3)
        d = build_design(rng.normal(size=(15, 1)))
        y = rng.normal(size=15)
        a = anova_rank_test(d, y, wilcoxon())
        b = anova_rank_test_contaminated(d, y + 0.0, wilcoxon())
        assert b.statistic == a.statistic

    def test_rank_preserving_perturbation_identical(self):
        rng = np.random.default_rng(4)
        d = build_design(rng.normal(size=(15, 1)))
        y = rng.normal(size=15)
        base = anova_rank_test_contaminated(d, y, wilcoxon()).statistic
        # shrink gaps without reordering
        order = np.argsort(y)
        y2 = np.empty_like(y)
        y2[order] = np.arange(15) * 0.001
        assert anova_rank_test_contaminated(d, y2, wilcoxon()).statistic == base

    def test_contamination_leaves_null_law_unchanged(self):
        # two-sample KS between null statistics with and without additive noise
        import scipy.stats

        n, reps = 40, 5000
        x = sample(normal(0, 1), n, seed=100)
        d = build_design(x)
        law = normal(0, 1)
        noise = normal(0, 3)
        clean = np.empty(reps)
        dirty = np.empty(reps)
        for k in range(reps):
            y = sample(law, n, seed=200 + k)
            v = sample(noise, n, seed=900_000 + k)
            clean[k] = anova_rank_test(d, y, wilcoxon()).statistic
            y2 = sample(law, n, seed=500_000 + k)
            dirty[k] = anova_rank_test_contaminated(d, y2 + v, wilcoxon()).statistic
        ks = scipy.stats.ks_2samp(clean, dirty)
        assert ks.pvalue > 0.01
