import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from rankcov.ancova import (
    ancova_rank_test,
    ancova_workspace,
    combined_residual_scores,
    covariate_criterion,
    covariate_rank_stats,
    gamma_limit_estimate,
    joint_criterion,
    rank_score_cov,
    response_criterion,
    schur_complement,
)
from rankcov.design import build_design
from rankcov.distributions import normal, sample, uniform
from rankcov.errors import DegenerateCovariateError
from rankcov.ranking import rank_collection
from rankcov.scores import ScoreKind, ScoreMode, ScoreVector, scores_approximate, wilcoxon

# small random designs trip the (intended) Noether diagnostic; not under test here
pytestmark = pytest.mark.filterwarnings("ignore:design Noether diagnostic")


def _random_instance(rng, n, p, q, dependence=0.5):
    x = rng.normal(size=(n, p))
    y = rng.normal(size=n)
    w = rng.normal(size=(n, q)) + dependence * y[:, None]
    return build_design(x), y, w


class TestCovariateRankStats:
    def test_concordant_covariate_duplicates_column(self):
        rng = np.random.default_rng(0)
        d = build_design(rng.normal(size=(8, 2)))
        y = rng.normal(size=8)
        rc = rank_collection(y, y[:, None] * 3.0 + 1.0)  # same ranks as y
        a = scores_approximate(wilcoxon(), 8)
        t = covariate_rank_stats(d, rc, a)
        assert_allclose(t[:, 0], t[:, 1], atol=1e-14)

    def test_constant_scores_zero_matrix(self):
        rng = np.random.default_rng(1)
        d = build_design(rng.normal(size=(6, 1)))
        rc = rank_collection(rng.normal(size=6), rng.normal(size=(6, 2)))
        a = ScoreVector(np.full(6, 1.5), ScoreMode.APPROXIMATE, ScoreKind.CUSTOM)
        assert_allclose(covariate_rank_stats(d, rc, a), 0.0, atol=1e-14)

    def test_matches_direct_sum_oracle(self):
        rng = np.random.default_rng(2)
        n, q = 6, 2
        x = rng.normal(size=(n, 2))
        d = build_design(x)
        y = rng.normal(size=n)
        w = rng.normal(size=(n, q))
        rc = rank_collection(y, w)
        a = scores_approximate(wilcoxon(), n)
        t = covariate_rank_stats(d, rc, a)
        xbar = x.mean(axis=0)
        for j in range(q + 1):
            oracle = sum(
                (x[i] - xbar) * a.values[int(rc.matrix[j, i]) - 1] for i in range(n)
            ) / np.sqrt(n)
            assert_allclose(t[:, j], oracle, atol=1e-12)


class TestRankScoreCov:
    def test_diagonal_is_score_variance(self):
        rc = rank_collection([1.0, 3.0, 2.0], np.array([[5.0], [1.0], [9.0]]))
        a = scores_approximate(wilcoxon(), 3)
        v = rank_score_cov(rc, a)
        assert_allclose(np.diag(v), 0.0625)

    def test_identical_rows_perfect_correlation(self):
        y = np.array([1.0, 3.0, 2.0, 4.0])
        rc = rank_collection(y, y[:, None] + 10.0)
        v = rank_score_cov(rc, scores_approximate(wilcoxon(), 4))
        assert v[0, 1] == pytest.approx(v[0, 0])

    def test_reversed_ranks_anticorrelation(self):
        y = np.array([1.0, 2.0, 3.0])
        rc = rank_collection(y, -y[:, None])
        v = rank_score_cov(rc, scores_approximate(wilcoxon(), 3))
        assert v[0, 1] == pytest.approx(-0.0625)


class TestSchurComplement:
    def test_hand_arithmetic(self):
        res = schur_complement(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert res.v_00_1 == pytest.approx(1.5)
        assert_allclose(res.weights, [0.5])

    def test_diagonal_no_adjustment(self):
        res = schur_complement(np.diag([3.0, 1.0, 2.0]))
        assert res.v_00_1 == pytest.approx(3.0)
        assert_allclose(res.weights, 0.0)

    def test_determinant_ratio_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = rng.normal(size=(4, 4))
            v = m @ m.T + 0.5 * np.eye(4)
            res = schur_complement(v)
            oracle = np.linalg.det(v) / np.linalg.det(v[1:, 1:])
            assert res.v_00_1 == pytest.approx(oracle, abs=1e-10)

    def test_singular_block_uses_pseudoinverse(self):
        # duplicated covariate: v_11 singular, result still finite
        v = np.array([[2.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
        res = schur_complement(v)
        assert res.rank_deficient
        assert 0.0 <= res.v_00_1 <= 2.0


class TestAncovaRankTest:
    def test_orthogonal_rank_pattern_reduces_to_v00_normed_anova(self):
        # ranks of w chosen so the score covariance v_0 is exactly zero
        y = np.array([1.0, 2.0, 3.0, 4.0])
        w = np.array([[30.0], [10.0], [40.0], [20.0]])
        d = build_design(np.array([0.0, 1.0, 3.0, 2.0]))
        a = scores_approximate(wilcoxon(), 4)
        rc = rank_collection(y, w)
        work = ancova_workspace(d, rc, a)
        assert work.v_0[0] == pytest.approx(0.0, abs=1e-15)
        res = ancova_rank_test(d, y, w, wilcoxon())
        assert res.statistic == pytest.approx(response_criterion(d, work), abs=1e-12)

    def test_covariate_identical_to_response_degenerate(self):
        rng = np.random.default_rng(4)
        d = build_design(rng.normal(size=(8, 1)))
        y = rng.normal(size=8)
        with pytest.raises(DegenerateCovariateError):
            ancova_rank_test(d, y, y[:, None], wilcoxon())

    def test_decomposition_identity(self):
        # criterion == joint form minus covariate-only form, every instance
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(8, 41))
            p = int(rng.integers(1, 4))
            q = int(rng.integers(1, 4))
            d, y, w = _random_instance(rng, n, p, q)
            res = ancova_rank_test(d, y, w, wilcoxon())
            rc = rank_collection(y, w)
            work = ancova_workspace(d, rc, scores_approximate(wilcoxon(), n))
            lhs = res.statistic
            rhs = joint_criterion(d, work) - covariate_criterion(d, work)
            assert lhs == pytest.approx(rhs, abs=1e-10 * max(1.0, lhs))

    def test_monotone_transforms_of_y_and_w_exact(self):
        rng = np.random.default_rng(6)
        d, y, w = _random_instance(rng, 15, 2, 2)
        base = ancova_rank_test(d, y, w, wilcoxon()).statistic
        y2 = np.exp(y)
        w2 = w.copy()
        w2[:, 0] = w2[:, 0] ** 3
        w2[:, 1] = 5.0 * w2[:, 1] - 2.0
        assert ancova_rank_test(d, y2, w2, wilcoxon()).statistic == base

    def test_norming_gain_when_covariance_nonzero(self):
        rng = np.random.default_rng(7)
        d, y, w = _random_instance(rng, 20, 1, 1, dependence=1.0)
        rc = rank_collection(y, w)
        work = ancova_workspace(d, rc, scores_approximate(wilcoxon(), 20))
        assert np.any(work.v_0 != 0)
        assert work.v_00_1 < work.v_00

    def test_residual_permutation_mean_zero(self):
        rng = np.random.default_rng(8)
        d, y, w = _random_instance(rng, 5, 1, 1)
        rc = rank_collection(y, w)
        a = scores_approximate(wilcoxon(), 5)
        work = ancova_workspace(d, rc, a)
        combined = combined_residual_scores(rc, a, work.weights)
        total = np.zeros(d.p)
        for perm in itertools.permutations(range(5)):
            total += d.x_centered.T @ combined[list(perm)] / np.sqrt(5)
        assert np.max(np.abs(total)) < 1e-12

    def test_schur_bound_on_instances(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            d, y, w = _random_instance(rng, 12, 1, 2)
            work = ancova_workspace(
                d, rank_collection(y, w), scores_approximate(wilcoxon(), 12)
            )
            assert work.v_00_1 <= work.v_00 + 1e-12
            assert work.v_00_1 >= -1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_v00_1_between_zero_and_v00_on_random_rank_patterns(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 16))
    q = int(rng.integers(1, 4))
    y = rng.normal(size=n)
    w = rng.normal(size=(n, q))
    rc = rank_collection(y, w)
    v = rank_score_cov(rc, scores_approximate(wilcoxon(), n))
    res = schur_complement(v)
    assert -1e-12 <= res.v_00_1 <= v[0, 0] + 1e-12


class TestGammaLimitEstimate:
    def test_single_repeated_matrix(self):
        v = np.array([[2.0, 1.0], [1.0, 2.0]])
        g = gamma_limit_estimate([v, v, v])
        assert_allclose(g.gamma, v)
        assert g.gamma_00_1 == pytest.approx(1.5)

    def test_gamma00_near_score_variance(self):
        # v_00 is the fixed sample variance of the scores: n/(12(n+1)) for
        # untied data, within a hair of 1/12
        rng = np.random.default_rng(11)
        n = 120
        a = scores_approximate(wilcoxon(), n)
        mats = []
        for _ in range(50):
            y = rng.normal(size=n)
            w = rng.normal(size=(n, 1))
            mats.append(rank_score_cov(rank_collection(y, w), a))
        g = gamma_limit_estimate(mats)
        assert g.gamma_00 == pytest.approx(1 / 12, abs=1e-3)

    def test_gamma0_vanishes_for_independent_covariate(self):
        rng = np.random.default_rng(12)
        n, reps = 60, 400
        a = scores_approximate(wilcoxon(), n)
        offs = []
        for _ in range(reps):
            y = rng.normal(size=n)
            w = rng.normal(size=(n, 1))
            offs.append(rank_score_cov(rank_collection(y, w), a)[0, 1])
        offs = np.array(offs)
        se = offs.std(ddof=1) / np.sqrt(reps)
        assert abs(offs.mean()) <= 3 * se
