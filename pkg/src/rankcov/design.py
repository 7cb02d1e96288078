"""Fixed-design algebra: centering, Gram matrix, Noether diagnostic.

The Gram matrix is Q_n = (1/n) X0' X0 with X0 the row-centered design. Its
inverse only ever appears inside quadratic forms, which are evaluated through
a Cholesky factor rather than an explicit inverse. The Noether diagnostic is
the largest leverage-type ratio (1/n) max_i (x_i - xbar)' Q_n^{-1} (x_i - xbar),
in [0,1]; regular designs drive it to zero as n grows. It is reported, and
warned about above 0.5, but never blocks a test.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateDesignError, DimensionError, SingularDesignError

_COND_MAX = 1e12


@dataclass(frozen=True)
class Design:
    x: np.ndarray
    x_centered: np.ndarray
    q_n: np.ndarray
    noether_max: float
    _chol: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def build_design(x) -> Design:
    """Validate and precompute the design pieces used by every test."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionError("design must be an n x p matrix")
    n, p = x.shape
    if p < 1 or n <= p:
        raise DimensionError(f"need n > p >= 1, got n={n}, p={p}")
    if np.all(x == x[0]):
        raise DegenerateDesignError("all design rows identical")
    x0 = x - x.mean(axis=0)
    q_n = (x0.T @ x0) / n
    ev = np.linalg.eigvalsh(q_n)
    if ev[0] <= 0 or ev[-1] / ev[0] > _COND_MAX:
        raise SingularDesignError(
            f"Gram matrix rank-deficient (eigenvalue range {ev[0]:.3e}..{ev[-1]:.3e})"
        )
    chol = scipy.linalg.cholesky(q_n, lower=True)
    # leverage ratios: solve L z = x0_i, noether term is ||z||^2 / n
    z = scipy.linalg.solve_triangular(chol, x0.T, lower=True)
    noether = float(np.max(np.sum(z * z, axis=0)) / n)
    if noether > 0.5:
        warnings.warn(
            f"design Noether diagnostic {noether:.3f} > 0.5: one row dominates the Gram matrix",
            stacklevel=2,
        )
    return Design(x=x, x_centered=x0, q_n=q_n, noether_max=noether, _chol=chol)


def quad_form_inverse(d: Design, v) -> float:
    """v' Q_n^{-1} v through the Cholesky factor (no explicit inverse)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (d.p,):
        raise DimensionError(f"vector of length {v.shape} against p={d.p}")
    z = scipy.linalg.solve_triangular(d._chol, v, lower=True)
    return float(z @ z)


def quad_form_inverse_batch(d: Design, vs: np.ndarray) -> np.ndarray:
    """Row-wise v' Q_n^{-1} v for a batch of vectors (B x p)."""
    z = scipy.linalg.solve_triangular(d._chol, vs.T, lower=True)
    return np.sum(z * z, axis=0)
