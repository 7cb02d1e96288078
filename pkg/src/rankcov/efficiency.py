"""Asymptotic-efficiency calculators.

The score/law cross term

    gamma(phi, h) = integral_0^1 phi(t) * (-h'(H^{-1}(t)) / h(H^{-1}(t))) dt

drives every noncentrality parameter. It is evaluated in x-space as
-integral phi(H(x)) h'(x) dx, with the density derivative by central finite
differences and the tail truncation shrunk until the value settles (the
integrand may be unbounded at the endpoints for normal scores). For Wilcoxon
scores the identity gamma = integral h(x)^2 dx is used instead, and the
integration-by-parts form integral h(H^{-1}(t)) dphi(t) is exposed separately
as a cross-check.

The latent-effect efficiency of a test run on corrupted errors h = f (+) noise
relative to clean errors f is (gamma(phi,h)/gamma(phi,f))^2; the ANOCOVA vs
ANOVA efficiency is the norming ratio gamma_00/gamma_00.1 >= 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.integrate
import scipy.linalg

from .ancova import GammaLimit
from .distributions import ConvolutionLaw, ErrorLaw, convolve_densities
from .errors import NumericError
from .scores import ScoreFunction, ScoreKind, score_norm_sq

_DELTAS = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13)
_SHRINK_RTOL = 1e-8
_Q_EDGES = (1e-10, 1e-7, 1e-4, 1e-2, 0.1, 0.5, 0.9, 0.99, 1 - 1e-4, 1 - 1e-7, 1 - 1e-10)


@dataclass(frozen=True)
class EfficiencyReport:
    gamma_phi_f: float
    gamma_phi_h: float
    are_latent: float
    fisher_f: float
    fisher_h: float
    upper_bound: float

    def to_dict(self) -> dict:
        return {
            "gamma_phi_f": self.gamma_phi_f,
            "gamma_phi_h": self.gamma_phi_h,
            "are_latent": self.are_latent,
            "fisher_f": self.fisher_f,
            "fisher_h": self.fisher_h,
            "upper_bound": self.upper_bound,
        }


def _fd_step_scale(law: ErrorLaw) -> float:
    # balance FD truncation against the noise floor of the density evaluation:
    # analytic densities are good to machine eps, convolution quadrature to ~1e-11
    return 2.2e-4 if isinstance(law, ConvolutionLaw) else 6.1e-6


def density_derivative(law: ErrorLaw, x: float) -> float:
    """Central finite-difference derivative of the density."""
    s = _fd_step_scale(law) * max(1.0, abs(x))
    return (float(law.density(x + s)) - float(law.density(x - s))) / (2.0 * s)


def _clip_unit(u: float) -> float:
    return min(max(u, 1e-300), float(np.nextafter(1.0, 0.0)))


def _quad_panel(f, lo: float, hi: float, law: ErrorLaw) -> float:
    pts = sorted(k for k in law.kinks() if lo < k < hi) or None
    val, _ = scipy.integrate.quad(f, lo, hi, points=pts, epsabs=1e-10, epsrel=1e-8,
                                  limit=200)
    return val


def _shrinking_tail_integral(law: ErrorLaw, integrand) -> float:
    """Integrate over [Q(delta), Q(1-delta)], shrinking delta until stable."""
    prev = None
    for delta in _DELTAS:
        lo, hi = float(law.quantile(delta)), float(law.quantile(1.0 - delta))
        med = law.median()
        val = _quad_panel(integrand, lo, med, law) + _quad_panel(integrand, med, hi, law)
        if prev is not None and abs(val - prev) <= _SHRINK_RTOL * max(1.0, abs(val)):
            return val
        prev = val
    raise NumericError(
        "tail-shrinking quadrature did not settle; integrand may diverge at the endpoints",
        achieved=abs(val - prev),
    )


def gamma_phi(phi: ScoreFunction, law: ErrorLaw) -> float:
    """gamma(phi, law) per the score-function cross term.

    Wilcoxon scores use the identity gamma = integral of the squared density;
    all other scores evaluate -integral phi(H(x)) h'(x) dx.
    """
    if phi.kind is ScoreKind.WILCOXON:
        return _shrinking_tail_integral(law, lambda x: float(law.density(x)) ** 2)

    def integrand(x: float) -> float:
        u = _clip_unit(float(law.cdf(x)))
        return -float(phi(np.array(u))) * density_derivative(law, x)

    return _shrinking_tail_integral(law, integrand)


def gamma_phi_stieltjes(phi: ScoreFunction, law: ErrorLaw) -> float:
    """The integration-by-parts form integral h(H^{-1}(t)) dphi(t).

    Needs phi' (or pure jumps); defined for the built-in scores and any custom
    score constructed with a derivative. Used to cross-check gamma_phi.
    """
    total = 0.0
    for t_atom, jump in phi.atoms:
        total += jump * float(law.density(law.quantile(t_atom)))
    if phi.deriv is None:
        if not phi.atoms:
            raise NumericError("score function has neither derivative nor atoms")
        return total

    def integrand(x: float) -> float:
        h = float(law.density(x))
        u = _clip_unit(float(law.cdf(x)))
        return h * h * float(phi.deriv(np.array(u)))

    return total + _shrinking_tail_integral(law, integrand)


def fisher_information(law: ErrorLaw) -> float:
    """integral (f'(z)/f(z))^2 f(z) dz over the law's effective support."""
    if law.kind == "uniform":
        raise NumericError("Fisher information diverges for the uniform law")

    def integrand(x: float) -> float:
        f = float(law.density(x))
        if f <= 1e-300:
            return 0.0
        d = density_derivative(law, x)
        return d * d / f

    edges = [float(law.quantile(u)) for u in _Q_EDGES]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            total += _quad_panel(integrand, lo, hi, law)
    if not np.isfinite(total):
        raise NumericError("Fisher information quadrature diverged")
    return total


def are_latent(
    phi: ScoreFunction,
    f_law: ErrorLaw,
    noise_law: Optional[ErrorLaw],
) -> EfficiencyReport:
    """Efficiency of the test under latent/corrupted errors vs clean errors.

    ``noise_law=None`` means no corruption: the report then states efficiency
    1 exactly. Otherwise the corrupted error law is the convolution f (+) noise.
    """
    g_f = gamma_phi(phi, f_law)
    i_f = fisher_information(f_law)
    a_sq = score_norm_sq(phi)
    if noise_law is None:
        return EfficiencyReport(
            gamma_phi_f=g_f,
            gamma_phi_h=g_f,
            are_latent=1.0,
            fisher_f=i_f,
            fisher_h=i_f,
            upper_bound=i_f * a_sq / (g_f * g_f),
        )
    h_law = convolve_densities(f_law, noise_law)
    g_h = gamma_phi(phi, h_law)
    i_h = fisher_information(h_law)
    return EfficiencyReport(
        gamma_phi_f=g_f,
        gamma_phi_h=g_h,
        are_latent=(g_h / g_f) ** 2,
        fisher_f=i_f,
        fisher_h=i_h,
        upper_bound=i_h * a_sq / (g_f * g_f),
    )


def noncentrality(beta_star, q, gamma_val: float, norming: float) -> float:
    """Limiting noncentrality beta*' Q beta* gamma^2 / norming.

    ``norming`` is A^2(phi) for the ANOVA-type test and gamma_00.1 for the
    covariance-adjusted test; the latter is never larger, so its noncentrality
    is never smaller.
    """
    beta_star = np.atleast_1d(np.asarray(beta_star, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if norming <= 0:
        raise ValueError("norming must be positive")
    try:
        scipy.linalg.cholesky(q)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("Q must be symmetric positive definite") from exc
    return float(beta_star @ q @ beta_star) * gamma_val**2 / norming


def are_ancova(gamma: GammaLimit) -> float:
    """gamma_00 / gamma_00.1 >= 1: ANOCOVA vs ANOVA efficiency."""
    if gamma.gamma_00_1 <= 0:
        raise NumericError(
            f"degenerate limiting covariance: gamma_00.1={gamma.gamma_00_1:.3e}"
        )
    return gamma.gamma_00 / gamma.gamma_00_1
