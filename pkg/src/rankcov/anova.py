"""Linear rank statistic and the ANOVA-type rank criterion.

The test of no regression rejects for large values of the quadratic form

    T^2 = S' Q_n^{-1} S / A^2(phi),    S = n^{-1/2} sum_i (x_i - xbar) a(R_i),

which is asymptotically chi-square with p degrees of freedom under the null.
Because only the ranks of the responses enter, the same criterion applied to
responses observed with additive measurement error keeps the exact same null
distribution; ``anova_rank_test_contaminated`` names that use case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .design import Design, quad_form_inverse, quad_form_inverse_batch
from .distributions import chisq_sf
from .errors import DimensionError
from .ranking import RankVector, TiePolicy, ranks
from .scores import (
    ScoreFunction,
    ScoreMode,
    ScoreVector,
    score_norm_sq,
    scores_approximate,
    scores_exact,
)


class TestMethod(str, Enum):
    ANOVA_RANK = "rank-anova"
    ANCOVA_RANK = "rank-ancova"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_asymptotic: float
    p_permutation: Optional[float]
    method: TestMethod
    n: int
    p: int
    q: int
    score_kind: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "method": self.method.value,
            "statistic": self.statistic,
            "df": self.df,
            "p_asymptotic": self.p_asymptotic,
            "p_permutation": self.p_permutation,
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "score_kind": self.score_kind,
        }
        d.update(self.diagnostics)
        return d


def make_scores(phi: ScoreFunction, n: int, mode: ScoreMode) -> ScoreVector:
    if mode is ScoreMode.EXACT:
        return scores_exact(phi, n)
    return scores_approximate(phi, n)


def scores_at_ranks(a: ScoreVector, rank_values: np.ndarray) -> np.ndarray:
    """a_n(R_i); mid-ranks take the average score over the tied positions."""
    vals = a.values
    if np.all(rank_values == np.round(rank_values)):
        return vals[rank_values.astype(int) - 1]
    out = np.empty_like(rank_values)
    for rho in np.unique(rank_values):
        mask = rank_values == rho
        g = int(mask.sum())
        start = int(round(rho - (g - 1) / 2.0)) - 1
        out[mask] = vals[start:start + g].mean()
    return out


def linear_rank_statistic(d: Design, r: RankVector, a: ScoreVector) -> np.ndarray:
    """S = n^{-1/2} sum_i (x_i - xbar) a(R_i), a p-vector."""
    if r.ranks.size != d.n or a.values.size != d.n:
        raise DimensionError(
            f"design n={d.n}, ranks n={r.ranks.size}, scores n={a.values.size}"
        )
    c = scores_at_ranks(a, r.ranks)
    return d.x_centered.T @ c / np.sqrt(d.n)


def quadform_statistic(d: Design, combined_scores: np.ndarray, norming: float) -> float:
    """Quadratic-form criterion from an observation-indexed score vector."""
    s = d.x_centered.T @ combined_scores / np.sqrt(d.n)
    return quad_form_inverse(d, s) / norming


def quadform_statistic_batch(d: Design, combined: np.ndarray, perms: np.ndarray,
                             norming: float) -> np.ndarray:
    """Criterion values for a batch of permutations (B x n index matrix)."""
    s = combined[perms] @ d.x_centered / np.sqrt(d.n)
    return quad_form_inverse_batch(d, s) / norming


def anova_rank_test(
    d: Design,
    y,
    phi: ScoreFunction,
    *,
    ties: TiePolicy = TiePolicy.error(),
    score_mode: ScoreMode = ScoreMode.APPROXIMATE,
    permutation=None,
) -> TestResult:
    """Rank test of no regression of y on the design.

    Ranks are computed here (not passed in) so the tie policy and design
    diagnostics end up recorded in the result. ``permutation`` optionally
    names a PermutationPlan for a permutation p-value next to the asymptotic
    chi-square one.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != d.n:
        raise DimensionError(f"y must be a length-{d.n} vector")
    r = ranks(y, ties, where="y")
    a = make_scores(phi, d.n, score_mode)
    combined = scores_at_ranks(a, r.ranks)
    norming = score_norm_sq(phi)
    stat = quadform_statistic(d, combined, norming)
    p_perm = None
    if permutation is not None:
        from .permute import permutation_pvalue

        p_perm = permutation_pvalue(
            stat,
            lambda perm: quadform_statistic(d, combined[np.asarray(perm)], norming),
            permutation,
            recompute_batch=lambda perms: quadform_statistic_batch(d, combined, perms, norming),
        )
    return TestResult(
        statistic=stat,
        df=d.p,
        p_asymptotic=chisq_sf(stat, d.p),
        p_permutation=p_perm,
        method=TestMethod.ANOVA_RANK,
        n=d.n,
        p=d.p,
        q=0,
        score_kind=phi.kind.value,
        diagnostics={
            "noether_max": d.noether_max,
            "tie_policy": ties.label(),
            "score_mode": score_mode.value,
        },
    )


def anova_rank_test_contaminated(
    d: Design,
    w_tilde,
    phi: ScoreFunction,
    *,
    ties: TiePolicy = TiePolicy.error(),
    score_mode: ScoreMode = ScoreMode.APPROXIMATE,
    permutation=None,
) -> TestResult:
    """Same criterion on responses observed with additive measurement error.

    Identical computation on the ranks of the observed w_tilde = y + v; under
    the null the statistic's law is unchanged by any i.i.d. contamination v.
    """
    return anova_rank_test(
        d, w_tilde, phi, ties=ties, score_mode=score_mode, permutation=permutation
    )
