"""Permutation-reference inference.

Both criteria are permutationally distribution-free: conditionally on the
observed rank configuration, all n! arrangements against the design are
equally likely under the null. Exact enumeration is feasible for n <= 8
(40,320 permutations); beyond that a Monte Carlo sample of permutations with
the add-one estimator p = (1 + #{stat >= observed}) / (B + 1) stands in.

Statistic ties are counted inclusively (>=), the conservative convention.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ._rng import substream
from .errors import ExactEnumerationError

EXACT_THRESHOLD = 8
_BATCH = 8192


class PermMode(str, Enum):
    EXACT = "exact"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class PermutationPlan:
    mode: PermMode
    n: int
    b: Optional[int] = None
    seed: Optional[int] = None
    exact_threshold: int = EXACT_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "mode", PermMode(self.mode))
        if self.n < 2:
            raise ValueError("need n >= 2")
        if self.mode is PermMode.EXACT and self.n > self.exact_threshold:
            raise ExactEnumerationError(
                f"exact enumeration refused for n={self.n} > {self.exact_threshold} "
                f"({math.factorial(self.n)} permutations); use Monte Carlo"
            )
        if self.mode is PermMode.MONTE_CARLO:
            if self.b is None or self.b < 99:
                raise ValueError("Monte Carlo permutation needs B >= 99")
            if self.seed is None:
                raise ValueError("Monte Carlo permutation needs an explicit seed")

    @classmethod
    def exact(cls, n: int, threshold: int = EXACT_THRESHOLD) -> "PermutationPlan":
        return cls(PermMode.EXACT, n, exact_threshold=threshold)

    @classmethod
    def monte_carlo(cls, n: int, b: int, seed: int) -> "PermutationPlan":
        return cls(PermMode.MONTE_CARLO, n, b=b, seed=seed)


def permutation_pvalue(
    observed: float,
    recompute: Callable[[tuple[int, ...]], float],
    plan: PermutationPlan,
    recompute_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> float:
    """Permutation p-value of an observed statistic.

    ``recompute`` maps a permutation (a tuple of 0-based indices rearranging
    the observations against the design) to the statistic value;
    ``recompute_batch``, when supplied, does the same for a B x n index matrix
    at once and is preferred for speed.
    """
    if plan.mode is PermMode.EXACT:
        hits = 0
        total = 0
        for block in _perm_blocks(plan.n):
            if recompute_batch is not None:
                hits += int(np.sum(recompute_batch(block) >= observed))
            else:
                hits += sum(1 for row in block if recompute(tuple(row)) >= observed)
            total += block.shape[0]
        return hits / total
    rng = substream(plan.seed, 0x5EED)
    b = plan.b
    hits = 0
    done = 0
    while done < b:
        take = min(_BATCH, b - done)
        perms = _random_perms(rng, take, plan.n)
        if recompute_batch is not None:
            hits += int(np.sum(recompute_batch(perms) >= observed))
        else:
            hits += sum(1 for row in perms if recompute(tuple(row)) >= observed)
        done += take
    return (1 + hits) / (b + 1)


def exact_null_distribution(
    recompute: Callable[[tuple[int, ...]], float],
    n: int,
    recompute_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    threshold: int = EXACT_THRESHOLD,
) -> np.ndarray:
    """All n! statistic values under the permutation measure."""
    if n > threshold:
        raise ExactEnumerationError(
            f"exact enumeration refused for n={n} > {threshold}"
        )
    out = []
    for block in _perm_blocks(n):
        if recompute_batch is not None:
            out.append(np.asarray(recompute_batch(block), dtype=float))
        else:
            out.append(np.array([recompute(tuple(row)) for row in block]))
    return np.concatenate(out)


def _perm_blocks(n: int):
    """Stream all n! permutations as index-matrix blocks."""
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, _BATCH))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _random_perms(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Uniform random permutations, resampling the (rare) identity draws."""
    perms = np.argsort(rng.random((count, n)), axis=1)
    identity = np.arange(n)
    mask = np.all(perms == identity, axis=1)
    while np.any(mask):
        perms[mask] = np.argsort(rng.random((int(mask.sum()), n)), axis=1)
        mask = np.all(perms == identity, axis=1)
    return perms
