"""Rank analysis of covariance for partially linear models.

Covariates observed alongside the response (possibly with measurement error)
enter through their coordinatewise ranks. The criterion is the quadratic form
of the residual rank statistic

    T_resid = T_0 - sum_j weight_j T_j,   weights = V_11^{-1} v_0,

normed by the Schur complement v_00.1 = v_00 - v_0' V_11^{-1} v_0 of the rank
score covariance matrix V. The statistic is computed through T_resid directly;
the equivalent difference-of-quadratic-forms decomposition (joint criterion
minus covariate-only criterion) loses precision and is kept only as a
verification identity (``joint_criterion`` / ``covariate_criterion``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.linalg

from .anova import (
    TestMethod,
    TestResult,
    make_scores,
    quadform_statistic,
    quadform_statistic_batch,
    scores_at_ranks,
)
from .design import Design
from .distributions import chisq_sf
from .errors import DegenerateCovariateError, DimensionError
from .ranking import RankCollection, TiePolicy, rank_collection
from .scores import ScoreFunction, ScoreMode, ScoreVector

_PINV_CUT = 1e-10
_DEGENERATE_CUT = 1e-10


@dataclass(frozen=True)
class AncovaWork:
    """Intermediate quantities of one rank-ANOCOVA fit."""

    t_matrix: np.ndarray      # p x (q+1), column j = T_j
    v_n: np.ndarray           # (q+1) x (q+1)
    v_00: float
    v_0: np.ndarray
    v_11: np.ndarray
    v_00_1: float
    weights: np.ndarray
    t_resid: np.ndarray
    v11_rank_deficient: bool


@dataclass(frozen=True)
class GammaLimit:
    """Limiting rank score covariance matrix and its Schur pieces."""

    gamma: np.ndarray
    gamma_00: float
    gamma_0: np.ndarray
    gamma_11: np.ndarray
    gamma_00_1: float


class SchurResult(NamedTuple):
    v_00_1: float
    weights: np.ndarray
    rank_deficient: bool


def covariate_rank_stats(d: Design, rc: RankCollection, a: ScoreVector) -> np.ndarray:
    """p x (q+1) matrix whose column j is T_j = n^{-1/2} sum (x_i-xbar) a(R_i^(j))."""
    if rc.n != d.n or a.values.size != d.n:
        raise DimensionError(f"design n={d.n}, ranks n={rc.n}, scores n={a.values.size}")
    score_rows = np.vstack([scores_at_ranks(a, row) for row in rc.matrix])
    return d.x_centered.T @ score_rows.T / np.sqrt(d.n)


def rank_score_cov(rc: RankCollection, a: ScoreVector) -> np.ndarray:
    """(q+1) x (q+1) rank score covariance V with entries
    v_jl = (n-1)^{-1} sum_i (a(R_i^(j)) - abar)(a(R_i^(l)) - abar)."""
    if rc.n < 2:
        raise DimensionError("need n >= 2")
    abar = float(a.values.mean())
    score_rows = np.vstack([scores_at_ranks(a, row) for row in rc.matrix]) - abar
    return score_rows @ score_rows.T / (rc.n - 1)


def schur_complement(v: np.ndarray) -> SchurResult:
    """Schur complement of the response entry and the regression weights.

    V_11 is inverted through an eigendecomposition pseudo-inverse with cutoff
    1e-10 times the largest eigenvalue, so near-collinear covariate ranks
    degrade gracefully; the flag reports whether the cutoff was triggered.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 2:
        raise DimensionError("need a square (q+1) x (q+1) matrix with q >= 1")
    if not np.allclose(v, v.T, atol=1e-8 * max(1.0, float(np.max(np.abs(v))))):
        raise DimensionError("rank score covariance must be symmetric")
    v_00 = float(v[0, 0])
    v_0 = v[1:, 0].copy()
    v_11 = v[1:, 1:]
    evals, evecs = np.linalg.eigh(v_11)
    cut = _PINV_CUT * max(float(evals[-1]), 0.0)
    keep = evals > cut
    inv_diag = np.where(keep, 1.0 / np.where(keep, evals, 1.0), 0.0)
    weights = evecs @ (inv_diag * (evecs.T @ v_0))
    v_00_1 = v_00 - float(v_0 @ weights)
    return SchurResult(v_00_1, weights, bool(np.any(~keep)))


def ancova_workspace(d: Design, rc: RankCollection, a: ScoreVector) -> AncovaWork:
    t = covariate_rank_stats(d, rc, a)
    v = rank_score_cov(rc, a)
    v_00_1, weights, deficient = schur_complement(v)
    t_resid = t[:, 0] - t[:, 1:] @ weights
    return AncovaWork(
        t_matrix=t,
        v_n=v,
        v_00=float(v[0, 0]),
        v_0=v[1:, 0].copy(),
        v_11=v[1:, 1:].copy(),
        v_00_1=v_00_1,
        weights=weights,
        t_resid=t_resid,
        v11_rank_deficient=deficient,
    )


def ancova_rank_test(
    d: Design,
    y,
    w,
    phi: ScoreFunction,
    *,
    ties: TiePolicy = TiePolicy.error(),
    score_mode: ScoreMode = ScoreMode.APPROXIMATE,
    permutation=None,
) -> TestResult:
    """Covariance-adjusted rank test of no regression of y on the design.

    Raises DegenerateCovariateError when the covariate ranks determine the
    response ranks (Schur complement below 1e-10 relative to v_00): the
    adjusted statistic is numerically meaningless there.
    """
    y = np.asarray(y, dtype=float)
    rc = rank_collection(y, w, ties)
    if y.size != d.n:
        raise DimensionError(f"y must be a length-{d.n} vector")
    a = make_scores(phi, d.n, score_mode)
    work = ancova_workspace(d, rc, a)
    if work.v_00_1 <= _DEGENERATE_CUT * max(work.v_00, np.finfo(float).tiny):
        raise DegenerateCovariateError(
            f"covariates rank-determine the response (v_00.1={work.v_00_1:.3e})"
        )
    combined = combined_residual_scores(rc, a, work.weights)
    stat = quadform_statistic(d, combined, work.v_00_1)
    p_perm = None
    if permutation is not None:
        from .permute import permutation_pvalue

        p_perm = permutation_pvalue(
            stat,
            lambda perm: quadform_statistic(d, combined[np.asarray(perm)], work.v_00_1),
            permutation,
            recompute_batch=lambda perms: quadform_statistic_batch(
                d, combined, perms, work.v_00_1
            ),
        )
    return TestResult(
        statistic=stat,
        df=d.p,
        p_asymptotic=chisq_sf(stat, d.p),
        p_permutation=p_perm,
        method=TestMethod.ANCOVA_RANK,
        n=d.n,
        p=d.p,
        q=rc.q,
        score_kind=phi.kind.value,
        diagnostics={
            "noether_max": d.noether_max,
            "tie_policy": ties.label(),
            "score_mode": score_mode.value,
            "v_00_1": work.v_00_1,
            "v11_rank_deficient": work.v11_rank_deficient,
        },
    )


def combined_residual_scores(rc: RankCollection, a: ScoreVector, weights: np.ndarray) -> np.ndarray:
    """Observation-indexed residual scores a(R^(0)) - sum_j weight_j a(R^(j)).

    Permuting columns of the rank collection jointly permutes this vector,
    while V (hence the weights and norming) is permutation-invariant; the
    whole permutation distribution of the criterion reduces to permutations
    of this single vector against the design.
    """
    score_rows = np.vstack([scores_at_ranks(a, row) for row in rc.matrix])
    return score_rows[0] - weights @ score_rows[1:]


def joint_criterion(d: Design, work: AncovaWork) -> float:
    """Quadratic form of all (q+1) rank-statistic columns in Q_n^{-1} (x) V^{-1}."""
    z = scipy.linalg.solve_triangular(d._chol, work.t_matrix, lower=True)
    b = z.T @ z
    return float(np.trace(scipy.linalg.solve(work.v_n, b, assume_a="sym")))


def covariate_criterion(d: Design, work: AncovaWork) -> float:
    """Covariate-only joint quadratic form (the subtracted term of the identity)."""
    z = scipy.linalg.solve_triangular(d._chol, work.t_matrix[:, 1:], lower=True)
    b = z.T @ z
    return float(np.trace(scipy.linalg.solve(work.v_11, b, assume_a="sym")))


def response_criterion(d: Design, work: AncovaWork) -> float:
    """Response-row quadratic form normed by v_00 (the unadjusted criterion)."""
    z = scipy.linalg.solve_triangular(d._chol, work.t_matrix[:, 0], lower=True)
    return float(z @ z) / work.v_00


def gamma_limit_estimate(samples: Iterable[np.ndarray]) -> GammaLimit:
    """Estimate the limiting rank score covariance from realized V matrices.

    Elementwise average across realizations, with the Schur pieces recomputed
    on the average.
    """
    total = None
    count = 0
    for v in samples:
        v = np.asarray(v, dtype=float)
        total = v.copy() if total is None else total + v
        count += 1
    if count < 1:
        raise DimensionError("need at least one realization")
    gamma = total / count
    g_00_1, _, _ = schur_complement(gamma)
    return GammaLimit(
        gamma=gamma,
        gamma_00=float(gamma[0, 0]),
        gamma_0=gamma[1:, 0].copy(),
        gamma_11=gamma[1:, 1:].copy(),
        gamma_00_1=g_00_1,
    )
