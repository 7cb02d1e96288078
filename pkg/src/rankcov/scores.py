"""Score-generating functions and per-sample score vectors.

A score function phi maps (0,1) to the reals and generates the per-rank scores
used by every statistic in the package, in one of two ways:

* approximate scores  a_n(i) = phi(i/(n+1))
* exact scores        a_n(i) = E phi(U_{n:i}), the expectation under the
  Beta(i, n-i+1) law of the i-th uniform order statistic

together with the norming constant A^2(phi) = integral of (phi - mean(phi))^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, ndtri

from .errors import DegenerateScoreError, InvalidScoreError, NumericError

_MONOTONE_GRID = 1024
_GL_START = 64
_GL_MAX = 2048
_GL_RTOL = 1e-10


class ScoreKind(str, Enum):
    WILCOXON = "wilcoxon"
    SIGN = "sign"
    VAN_DER_WAERDEN = "vdw"
    CUSTOM = "custom"


class ScoreMode(str, Enum):
    APPROXIMATE = "approximate"
    EXACT = "exact"


@dataclass(frozen=True)
class ScoreFunction:
    """A score generator phi on (0,1).

    ``fn`` must accept numpy arrays with values strictly inside (0,1).
    ``deriv`` (phi') and ``atoms`` (jump locations/sizes of a step phi) are
    optional extras consumed by the efficiency calculators; ``breakpoints``
    mark interior discontinuities so quadrature can panel around them.
    """

    kind: ScoreKind
    fn: Callable[[np.ndarray], np.ndarray]
    monotone: bool = True
    deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    atoms: tuple[tuple[float, float], ...] = ()
    breakpoints: tuple[float, ...] = ()

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        try:
            out = np.asarray(self.fn(t), dtype=float)
        except Exception as exc:
            raise InvalidScoreError(f"score function failed to evaluate: {exc}") from exc
        if out.shape != t.shape:
            out = np.broadcast_to(out, t.shape).astype(float)
        if not np.all(np.isfinite(out)):
            bad = t[~np.isfinite(out)]
            raise InvalidScoreError(
                f"score function not finite at t={bad[:5].tolist()}"
            )
        return out


def wilcoxon() -> ScoreFunction:
    """phi(t) = t."""
    return ScoreFunction(ScoreKind.WILCOXON, lambda t: t, deriv=lambda t: np.ones_like(t))


def sign_scores() -> ScoreFunction:
    """phi(t) = sign(t - 1/2); the median-test scores."""
    return ScoreFunction(
        ScoreKind.SIGN,
        lambda t: np.sign(t - 0.5),
        atoms=((0.5, 2.0),),
        breakpoints=(0.5,),
    )


def van_der_waerden() -> ScoreFunction:
    """phi(t) = standard normal quantile of t."""

    def dv(t):
        z = ndtri(t)
        return np.sqrt(2.0 * np.pi) * np.exp(0.5 * z * z)

    return ScoreFunction(ScoreKind.VAN_DER_WAERDEN, ndtri, deriv=dv)


def custom(
    fn: Callable[[np.ndarray], np.ndarray],
    monotone: bool,
    deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    breakpoints: Sequence[float] = (),
) -> ScoreFunction:
    """Wrap a user-supplied score function.

    The monotonicity declaration is verified on a 1024-point grid; a violation
    warns rather than errors, since the quadratic-form statistics only need
    square integrability. Square integrability itself is checked by quadrature.
    """

    def vec(t: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(fn(t), dtype=float)
            if out.shape == t.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(fn(ti)) for ti in np.atleast_1d(t)]).reshape(np.shape(t))

    phi = ScoreFunction(ScoreKind.CUSTOM, vec, monotone=monotone, deriv=deriv,
                        breakpoints=tuple(sorted(breakpoints)))
    grid = (np.arange(1, _MONOTONE_GRID + 1)) / (_MONOTONE_GRID + 1)
    vals = phi(grid)
    if monotone and np.any(np.diff(vals) < -1e-12 * max(1.0, float(np.max(np.abs(vals))))):
        warnings.warn("custom score function declared monotone but decreases on the check grid",
                      stacklevel=2)
    # square-integrability: the quadrature must converge
    _integrate_01(lambda t: phi(t) ** 2, phi.breakpoints)
    return phi


def from_table(path: str, monotone: bool = True) -> ScoreFunction:
    """Load a custom score function from a two-column (t, phi(t)) text file.

    Values are linearly interpolated; t must lie in (0,1) and be strictly
    increasing.
    """
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise InvalidScoreError(f"score table {path!r} must have two columns and >= 2 rows")
    t, v = data[:, 0], data[:, 1]
    if np.any(t <= 0) or np.any(t >= 1) or np.any(np.diff(t) <= 0):
        raise InvalidScoreError("score table abscissae must be strictly increasing in (0,1)")
    # the knots are derivative discontinuities: panel the quadrature there
    return custom(lambda u: np.interp(u, t, v), monotone=monotone, breakpoints=t)


def from_name(name: str) -> ScoreFunction:
    """Resolve a CLI score name (wilcoxon|sign|vdw)."""
    table = {
        "wilcoxon": wilcoxon,
        "sign": sign_scores,
        "vdw": van_der_waerden,
    }
    if name not in table:
        raise InvalidScoreError(f"unknown score kind {name!r}; expected one of {sorted(table)}")
    return table[name]()


@dataclass(frozen=True)
class ScoreVector:
    """Scores a_n(1..n) generated from a ScoreFunction."""

    values: np.ndarray
    mode: ScoreMode
    source: ScoreKind

    def __post_init__(self):
        if self.values.ndim != 1 or self.values.size < 2:
            raise InvalidScoreError("score vector needs length n >= 2")


def scores_approximate(phi: ScoreFunction, n: int) -> ScoreVector:
    """a_n(i) = phi(i/(n+1)) for i = 1..n."""
    if n < 2:
        raise InvalidScoreError(f"need n >= 2, got {n}")
    vals = phi(np.arange(1, n + 1) / (n + 1))
    return ScoreVector(vals, ScoreMode.APPROXIMATE, phi.kind)


def scores_exact(phi: ScoreFunction, n: int) -> ScoreVector:
    """a_n(i) = E phi(U_{n:i}) by Gauss-Legendre quadrature against Beta(i, n-i+1).

    Node counts double (starting at 64 per panel) until the whole score vector
    changes by less than 1e-10 in the max norm.
    """
    if n < 2:
        raise InvalidScoreError(f"need n >= 2, got {n}")
    i = np.arange(1, n + 1)[:, None]
    lognorm = gammaln(n + 1) - gammaln(i) - gammaln(n - i + 1)

    def beta_weighted(u: np.ndarray, w: np.ndarray) -> np.ndarray:
        logpdf = lognorm + (i - 1) * np.log(u)[None, :] + (n - i) * np.log1p(-u)[None, :]
        return (np.exp(logpdf) * phi(u)[None, :]) @ w

    panels = _panels(phi.breakpoints)
    prev = None
    m = _GL_START
    while m <= _GL_MAX:
        total = np.zeros(n)
        for lo, hi in panels:
            u, w = _gl_nodes(m, lo, hi)
            total += beta_weighted(u, w)
        if prev is not None:
            diff = float(np.max(np.abs(total - prev)))
            if diff <= _GL_RTOL * max(1.0, float(np.max(np.abs(total)))):
                return ScoreVector(total, ScoreMode.EXACT, phi.kind)
        prev = total
        m *= 2
    raise NumericError(
        f"exact-score quadrature did not converge by {_GL_MAX} nodes",
        achieved=diff,
    )


def score_norm_sq(phi: ScoreFunction) -> float:
    """A^2(phi) = integral of (phi(t) - mean(phi))^2 over (0,1).

    Closed forms for the built-in kinds; quadrature otherwise. A (numerically)
    constant phi is rejected because it makes the test statistics undefined.
    """
    closed = {
        ScoreKind.WILCOXON: 1.0 / 12.0,
        ScoreKind.SIGN: 1.0,
        ScoreKind.VAN_DER_WAERDEN: 1.0,
    }
    if phi.kind in closed:
        return closed[phi.kind]
    mean = _integrate_01(phi, phi.breakpoints)
    a_sq = _integrate_01(lambda t: (phi(t) - mean) ** 2, phi.breakpoints)
    if a_sq <= 1e-14:
        raise DegenerateScoreError("constant score function: A^2(phi) = 0")
    return a_sq


_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(m: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on (lo, hi) under an endpoint-flattening map.

    The substitution u = lo + (hi-lo)*(v - sin(2*pi*v)/(2*pi)) sends the panel
    ends to zero-weight regions, so integrable endpoint singularities (normal
    scores diverge at 0 and 1) still converge at the plain doubling rate.
    """
    if m not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(m)
        _gl_cache[m] = (x, w)
    x, w = _gl_cache[m]
    v = 0.5 * (x + 1.0)
    u = v - np.sin(2.0 * np.pi * v) / (2.0 * np.pi)
    du = 1.0 - np.cos(2.0 * np.pi * v)
    span = hi - lo
    return lo + span * u, 0.5 * span * w * du


def _panels(breakpoints: tuple[float, ...]) -> list[tuple[float, float]]:
    edges = [0.0, *[b for b in breakpoints if 0.0 < b < 1.0], 1.0]
    return list(zip(edges[:-1], edges[1:]))


def _integrate_01(f: Callable[[np.ndarray], np.ndarray], breakpoints: tuple[float, ...] = ()) -> float:
    """Integrate f over (0,1) by panelled Gauss-Legendre with node doubling."""
    panels = _panels(breakpoints)
    prev = None
    m = _GL_START
    while m <= _GL_MAX:
        total = 0.0
        for lo, hi in panels:
            u, w = _gl_nodes(m, lo, hi)
            total += float(np.asarray(f(u)) @ w)
        if prev is not None:
            diff = abs(total - prev)
            if diff <= _GL_RTOL * max(1.0, abs(total)):
                return total
        prev = total
        m *= 2
    raise NumericError(f"quadrature on (0,1) did not converge by {_GL_MAX} nodes", achieved=diff)
