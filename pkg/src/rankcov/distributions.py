"""Error-law toolbox: densities, quantiles, samplers, chi-square references.

Base laws delegate density/CDF/quantile to scipy frozen distributions; the
convolution law is evaluated numerically. Sampling is inverse-transform driven
by a counter-based stream (see _rng), so identical seeds give identical draws.

Law specification strings, as used in configs and on the CLI:

    normal:MU,SIGMA      laplace:MU,B      cauchy:X0,GAMMA
    uniform:LO,HI        logistic:MU,S     none

The second normal parameter is the standard deviation (the simulation setup
names N(0,0.7) and N(0,2) without saying which convention is meant; this
package fixes it as the standard deviation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.stats
from scipy.special import gammaincc, gammainc

from ._rng import substream, uniform_open
from .errors import NumericError, SchemaError

_TAIL_EPS = 1e-10


class ErrorLaw:
    """Continuous error law: density, CDF, quantile, seeded sampler."""

    kind: str = ""

    def density(self, x) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def quantile(self, u) -> np.ndarray:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.quantile(uniform_open(rng, n))

    def median(self) -> float:
        return float(self.quantile(0.5))

    def support_window(self, eps: float = _TAIL_EPS) -> tuple[float, float]:
        """Quantile range covering all but ``2*eps`` of the mass."""
        return float(self.quantile(eps)), float(self.quantile(1.0 - eps))

    def kinks(self) -> tuple[float, ...]:
        """Interior points where the density is not smooth."""
        return ()

    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"ErrorLaw({self.spec()})"


class _ScipyLaw(ErrorLaw):
    def __init__(self, kind: str, frozen, params: tuple[float, ...]):
        self.kind = kind
        self._dist = frozen
        self.params = params

    def density(self, x):
        return self._dist.pdf(x)

    def cdf(self, x):
        return self._dist.cdf(x)

    def quantile(self, u):
        return self._dist.ppf(u)

    def spec(self) -> str:
        return f"{self.kind}:" + ",".join(_fmt(p) for p in self.params)


def _fmt(v: float) -> str:
    return f"{v:g}"


def normal(mu: float = 0.0, sigma: float = 1.0) -> ErrorLaw:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return _ScipyLaw("normal", scipy.stats.norm(mu, sigma), (mu, sigma))


def laplace(mu: float = 0.0, b: float = 1.0) -> ErrorLaw:
    if b <= 0:
        raise ValueError("scale must be positive")
    law = _ScipyLaw("laplace", scipy.stats.laplace(mu, b), (mu, b))
    law.kinks = lambda: (mu,)  # type: ignore[method-assign]
    return law


def cauchy(x0: float = 0.0, gamma: float = 1.0) -> ErrorLaw:
    if gamma <= 0:
        raise ValueError("scale must be positive")
    return _ScipyLaw("cauchy", scipy.stats.cauchy(x0, gamma), (x0, gamma))


def uniform(lo: float = -1.0, hi: float = 1.0) -> ErrorLaw:
    if hi <= lo:
        raise ValueError("need lo < hi")
    law = _ScipyLaw("uniform", scipy.stats.uniform(lo, hi - lo), (lo, hi))
    law.kinks = lambda: (lo, hi)  # type: ignore[method-assign]
    # the exact mass range, not the 1e-10 quantiles: avoids degenerate windows
    law.support_window = lambda eps=_TAIL_EPS: (lo, hi)  # type: ignore[method-assign]
    return law


def logistic(mu: float = 0.0, s: float = 1.0) -> ErrorLaw:
    if s <= 0:
        raise ValueError("scale must be positive")
    return _ScipyLaw("logistic", scipy.stats.logistic(mu, s), (mu, s))


def parse_law(spec: str) -> Optional[ErrorLaw]:
    """Parse a law specification string; ``"none"`` maps to None."""
    spec = spec.strip().lower()
    if spec in ("none", ""):
        return None
    try:
        kind, _, rest = spec.partition(":")
        args = tuple(float(tok) for tok in rest.split(",")) if rest else ()
        factory = {
            "normal": normal,
            "laplace": laplace,
            "cauchy": cauchy,
            "uniform": uniform,
            "logistic": logistic,
        }[kind]
        return factory(*args)
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad law specification {spec!r}: {exc}") from exc


class ConvolutionLaw(ErrorLaw):
    """Law of X + Y for independent X ~ a, Y ~ b, evaluated by quadrature.

    The integration variable is the lighter-tailed component (the one with the
    narrower 1e-10 quantile window), so truncation misses at most ~2e-10 of
    mass even when the other component is Cauchy.
    """

    kind = "convolution"

    def __init__(self, a: ErrorLaw, b: ErrorLaw):
        self.a = a
        self.b = b
        wa, wb = a.support_window(), b.support_window()
        if (wa[1] - wa[0]) <= (wb[1] - wb[0]):
            self._inner, self._outer = a, b
            self._window = wa
        else:
            self._inner, self._outer = b, a
            self._window = wb

    def _quad_points(self, t: float) -> list[float]:
        lo, hi = self._window
        pts = [k for k in self._inner.kinks() if lo < k < hi]
        pts += [t - k for k in self._outer.kinks() if lo < t - k < hi]
        return sorted(pts)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self._window
        out = np.empty(x.shape)
        for idx, t in np.ndenumerate(x):
            val, _ = scipy.integrate.quad(
                lambda s: self._outer.density(t - s) * self._inner.density(s),
                lo, hi, points=self._quad_points(float(t)) or None,
                epsabs=1e-11, epsrel=1e-9, limit=200,
            )
            out[idx] = val
        return out if out.shape else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self._window
        out = np.empty(x.shape)
        for idx, t in np.ndenumerate(x):
            val, _ = scipy.integrate.quad(
                lambda s: self._outer.cdf(t - s) * self._inner.density(s),
                lo, hi, points=self._quad_points(float(t)) or None,
                epsabs=1e-11, epsrel=1e-9, limit=200,
            )
            out[idx] = min(1.0, max(0.0, val))
        return out if out.shape else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        out = np.empty(u.shape)
        for idx, ui in np.ndenumerate(u):
            out[idx] = self._quantile_scalar(float(ui))
        return out if out.shape else float(out)

    def _quantile_scalar(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            return float("-inf") if u <= 0 else float("inf")
        # beyond what the numerical CDF can resolve, return the conservative
        # outer bound: P(X+Y <= qa(u/2)+qb(u/2)) <= u and symmetrically above
        if u < 1e-8:
            return float(self.a.quantile(u / 2)) + float(self.b.quantile(u / 2))
        if u > 1.0 - 1e-8:
            v = (1.0 - u) / 2
            return float(self.a.quantile(1 - v)) + float(self.b.quantile(1 - v))
        guess = float(self._outer.quantile(u)) + self._inner.median()
        width = max(1.0, abs(guess)) * 0.5
        lo, hi = guess - width, guess + width
        for _ in range(200):
            if self.cdf(lo) < u:
                break
            lo -= width
            width *= 2
        else:
            raise NumericError("convolution quantile bracket failed (lower)")
        width = max(1.0, abs(guess)) * 0.5
        for _ in range(200):
            if self.cdf(hi) > u:
                break
            hi += width
            width *= 2
        else:
            raise NumericError("convolution quantile bracket failed (upper)")
        return float(scipy.optimize.brentq(lambda t: self.cdf(t) - u, lo, hi, xtol=1e-10))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.a.sample(n, rng) + self.b.sample(n, rng)

    def support_window(self, eps: float = _TAIL_EPS) -> tuple[float, float]:
        (alo, ahi), (blo, bhi) = self.a.support_window(eps), self.b.support_window(eps)
        return alo + blo, ahi + bhi

    def spec(self) -> str:
        return f"convolution({self.a.spec()},{self.b.spec()})"


def convolve_densities(a: ErrorLaw, b: ErrorLaw) -> ErrorLaw:
    """Law of the sum of independent draws from a and b.

    Sums within the stable families (normal+normal, cauchy+cauchy) return the
    exact closed-form member; everything else gets the quadrature-backed law.
    """
    if isinstance(a, _ScipyLaw) and isinstance(b, _ScipyLaw) and a.kind == b.kind:
        if a.kind == "normal":
            return normal(a.params[0] + b.params[0],
                          float(np.hypot(a.params[1], b.params[1])))
        if a.kind == "cauchy":
            return cauchy(a.params[0] + b.params[0], a.params[1] + b.params[1])
    return ConvolutionLaw(a, b)


def sample(law: ErrorLaw, n: int, seed: int) -> np.ndarray:
    """Draw n values from the stream addressed by seed (deterministic)."""
    if n < 1:
        raise ValueError("need n >= 1")
    return law.sample(n, substream(seed))


@dataclass(frozen=True)
class ChiSquareRef:
    """Reference chi-square law, possibly noncentral."""

    df: int
    noncentrality: float = 0.0

    def __post_init__(self):
        if self.df < 1:
            raise ValueError("df must be >= 1")
        if self.noncentrality < 0:
            raise ValueError("noncentrality must be >= 0")

    def sf(self, x: float) -> float:
        if self.noncentrality != 0.0:
            return 1.0 - noncentral_chisq_cdf(x, self)
        return chisq_sf(x, self.df)

    def cdf(self, x: float) -> float:
        return noncentral_chisq_cdf(x, self)

    def isf(self, alpha: float) -> float:
        if self.noncentrality != 0.0:
            raise ValueError("critical values implemented for the central case only")
        return float(scipy.stats.chi2.isf(alpha, self.df))


def chisq_sf(x: float, df: int) -> float:
    """P(chi^2_df > x) via the regularized upper incomplete gamma."""
    if x < 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def noncentral_chisq_cdf(x: float, ref: ChiSquareRef) -> float:
    """Poisson-mixture series of central chi-square CDFs.

    Terms are added until the remaining Poisson tail weight drops below 1e-12,
    which bounds the truncation error by the same amount (each CDF term is
    at most 1).
    """
    if x < 0:
        return 0.0
    half_lam = ref.noncentrality / 2.0
    if half_lam == 0.0:
        return float(gammainc(ref.df / 2.0, x / 2.0))
    w = float(np.exp(-half_lam))
    cum_w = w
    total = w * float(gammainc(ref.df / 2.0, x / 2.0))
    j = 0
    while 1.0 - cum_w > 1e-12:
        j += 1
        if j > 10**6:
            raise NumericError(
                "noncentral chi-square series exceeded 1e6 terms",
                achieved=1.0 - cum_w,
            )
        w *= half_lam / j
        cum_w += w
        total += w * float(gammainc(ref.df / 2.0 + j, x / 2.0))
    return min(1.0, total)
