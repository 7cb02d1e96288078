"""Rank computation for responses and covariates.

The default tie policy errors out, because the underlying theory assumes
absolutely continuous laws (ties have probability zero). Mid-ranks are offered
for real data with the caveat that permutational distribution-freeness is then
conditional on the observed tie pattern; random tie-breaking uses a dedicated
seeded stream so results stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import rankdata

from ._rng import substream
from .errors import DimensionError, TieError


class TieKind(str, Enum):
    ERROR = "error"
    MIDRANK = "midrank"
    RANDOM = "random"


@dataclass(frozen=True)
class TiePolicy:
    kind: TieKind
    seed: int | None = None

    @classmethod
    def error(cls) -> "TiePolicy":
        return cls(TieKind.ERROR)

    @classmethod
    def midrank(cls) -> "TiePolicy":
        return cls(TieKind.MIDRANK)

    @classmethod
    def random(cls, seed: int) -> "TiePolicy":
        return cls(TieKind.RANDOM, seed)

    def label(self) -> str:
        return self.kind.value if self.seed is None else f"{self.kind.value}({self.seed})"


@dataclass(frozen=True)
class RankVector:
    """Ranks of one sample; a permutation of 1..n unless mid-ranks were used."""

    ranks: np.ndarray
    tie_policy: TiePolicy


@dataclass(frozen=True)
class RankCollection:
    """(q+1) x n matrix: row 0 ranks the response, row j >= 1 ranks covariate j.

    Column i refers to observation unit i in every row.
    """

    matrix: np.ndarray
    tie_policy: TiePolicy

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def q(self) -> int:
        return self.matrix.shape[0] - 1


def _tied_groups(values: np.ndarray) -> list[tuple[int, ...]]:
    order = np.argsort(values, kind="stable")
    sv = values[order]
    groups = []
    start = 0
    for k in range(1, len(sv) + 1):
        if k == len(sv) or sv[k] != sv[start]:
            if k - start > 1:
                groups.append(tuple(sorted(order[start:k].tolist())))
            start = k
    return groups


def ranks(values, policy: TiePolicy = TiePolicy.error(), where: str | None = None) -> RankVector:
    """Rank a sample ascending (1 = smallest), resolving ties per policy."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError("ranks() needs a non-empty 1-d array")
    if policy.kind is TieKind.MIDRANK:
        return RankVector(rankdata(v, method="average"), policy)
    groups = _tied_groups(v)
    if groups:
        if policy.kind is TieKind.ERROR:
            raise TieError(groups, where=where)
        rng = substream(policy.seed, 0xC0FFEE)
        jitter = rng.permutation(v.size)
        order = np.lexsort((jitter, v))
    else:
        order = np.argsort(v, kind="stable")
    r = np.empty(v.size, dtype=float)
    r[order] = np.arange(1, v.size + 1)
    return RankVector(r, policy)


def rank_collection(y, w, policy: TiePolicy = TiePolicy.error()) -> RankCollection:
    """Stack response ranks on top of coordinatewise covariate ranks."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    if w.ndim != 2 or w.shape[1] < 1:
        raise DimensionError("covariate block must be an n x q matrix with q >= 1")
    if w.shape[0] != y.size:
        raise DimensionError(
            f"y has {y.size} rows but covariates have {w.shape[0]}"
        )
    rows = [ranks(y, policy, where="y").ranks]
    for j in range(w.shape[1]):
        rows.append(ranks(w[:, j], policy, where=f"w{j + 1}").ranks)
    return RankCollection(np.vstack(rows), policy)
