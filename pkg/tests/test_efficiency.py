"""Efficiency-calculator tests.

Frozen closed-form oracles (30-digit mpmath):
  gamma(wilcoxon, normal(0,1))   = 1/(2 sqrt(pi))   = 0.28209479177387814
  gamma(wilcoxon, logistic(0,1)) = 1/6
  gamma(wilcoxon, laplace(0,1))  = 1/4
  gamma(sign, normal(0,1))       = 2 phi(0) = 2/sqrt(2 pi) = 0.7978845608028654
  gamma(sign, laplace(0,1))      = 2 h(0) = 1
  gamma(vdw, normal(0,1))        = I(normal) = 1
  Fisher: normal(0,1) -> 1, normal(0,2) -> 1/4, cauchy(0,1) -> 1/2
  noncentrality example: (2/3) * (1/(2 sqrt(pi)))^2 * 12 = 0.6366197723675813
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankcov.ancova import GammaLimit, gamma_limit_estimate, schur_complement
from rankcov.distributions import cauchy, laplace, logistic, normal, uniform
from rankcov.efficiency import (
    are_ancova,
    are_latent,
    fisher_information,
    gamma_phi,
    gamma_phi_stieltjes,
    noncentrality,
)
from rankcov.errors import NumericError
from rankcov.scores import sign_scores, van_der_waerden, wilcoxon

GAMMA_ORACLES = [
    (wilcoxon(), normal(0, 1), 0.28209479177387814),
    (wilcoxon(), logistic(0, 1), 1 / 6),
    (wilcoxon(), laplace(0, 1), 0.25),
    (sign_scores(), normal(0, 1), 0.7978845608028654),
    (sign_scores(), laplace(0, 1), 1.0),
    (van_der_waerden(), normal(0, 1), 1.0),
]


class TestGammaPhi:
    @pytest.mark.parametrize("phi,law,expected", GAMMA_ORACLES,
                             ids=[f"{p.kind.value}-{l.kind}" for p, l, _ in GAMMA_ORACLES])
    def test_closed_form_oracles(self, phi, law, expected):
        assert gamma_phi(phi, law) == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("phi,law,expected", GAMMA_ORACLES,
                             ids=[f"{p.kind.value}-{l.kind}" for p, l, _ in GAMMA_ORACLES])
    def test_both_formulas_agree(self, phi, law, expected):
        a = gamma_phi(phi, law)
        b = gamma_phi_stieltjes(phi, law)
        assert a == pytest.approx(b, abs=1e-6)

    def test_formulas_agree_on_numerical_convolution(self):
        from rankcov.distributions import convolve_densities

        law = convolve_densities(normal(0, 1), uniform(-1, 1))
        a = gamma_phi(wilcoxon(), law)
        b = gamma_phi_stieltjes(wilcoxon(), law)
        assert a == pytest.approx(b, abs=1e-5)


class TestFisherInformation:
    def test_standard_normal(self):
        assert fisher_information(normal(0, 1)) == pytest.approx(1.0, abs=1e-6)

    def test_scaling_law(self):
        assert fisher_information(normal(0, 2)) == pytest.approx(0.25, abs=1e-6)

    def test_cauchy(self):
        assert fisher_information(cauchy(0, 1)) == pytest.approx(0.5, abs=1e-6)

    def test_uniform_divergent(self):
        with pytest.raises(NumericError):
            fisher_information(uniform(-1, 1))

    @pytest.mark.parametrize("f,noise", [
        (normal(0, 1), normal(0, 0.7)),
        (normal(0, 1), uniform(-1, 1)),
        (laplace(0, 1), normal(0, 0.7)),
    ])
    def test_convolution_never_gains_information(self, f, noise):
        from rankcov.distributions import convolve_densities

        h = convolve_densities(f, noise)
        assert fisher_information(h) <= fisher_information(f) + 1e-6


class TestAreLatent:
    def test_no_noise_is_exactly_one(self):
        rep = are_latent(wilcoxon(), normal(0, 1), None)
        assert rep.are_latent == 1.0
        assert rep.gamma_phi_h == rep.gamma_phi_f

    def test_near_point_mass_noise(self):
        rep = are_latent(wilcoxon(), normal(0, 1), uniform(-1e-6, 1e-6))
        assert rep.are_latent == pytest.approx(1.0, abs=1e-3)

    def test_monotone_in_noise_scale_and_bounded(self):
        vals = []
        for sigma in (1.0, 2.0, 5.0, 10.0):
            rep = are_latent(wilcoxon(), normal(0, 1), normal(0, sigma))
            assert rep.are_latent <= 1 + 1e-9
            vals.append(rep.are_latent)
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_upper_bound_field(self):
        rep = are_latent(wilcoxon(), normal(0, 1), normal(0, 1))
        assert rep.are_latent <= rep.upper_bound + 1e-9
        assert rep.fisher_h <= rep.fisher_f + 1e-6


class TestNoncentrality:
    def test_zero_beta(self):
        assert noncentrality(np.zeros(2), np.eye(2), 0.3, 1 / 12) == 0.0

    def test_worked_value(self):
        got = noncentrality(np.array([1.0]), np.array([[2 / 3]]),
                            0.28209479177387814, 1 / 12)
        assert got == pytest.approx(0.6366197723675813, abs=1e-9)

    def test_smaller_norming_larger_shift(self):
        beta, q, g = np.array([1.0, -0.5]), np.array([[2.0, 0.3], [0.3, 1.0]]), 0.25
        assert noncentrality(beta, q, g, 0.05) > noncentrality(beta, q, g, 1 / 12)

    def test_rejects_non_spd(self):
        with pytest.raises(ValueError):
            noncentrality(np.array([1.0, 1.0]), np.array([[1.0, 2.0], [2.0, 1.0]]),
                          0.3, 1.0)


class TestAreAncova:
    def test_uncorrelated_covariates_give_exactly_one(self):
        g = gamma_limit_estimate([np.diag([1 / 12, 1 / 12])])
        assert are_ancova(g) == 1.0

    def test_hand_arithmetic(self):
        g = gamma_limit_estimate([np.array([[2.0, 1.0], [1.0, 2.0]])])
        assert are_ancova(g) == pytest.approx(4 / 3)

    def test_degenerate_rejected(self):
        g = GammaLimit(
            gamma=np.array([[1.0, 1.0], [1.0, 1.0]]),
            gamma_00=1.0,
            gamma_0=np.array([1.0]),
            gamma_11=np.array([[1.0]]),
            gamma_00_1=0.0,
        )
        with pytest.raises(NumericError):
            are_ancova(g)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_are_ancova_at_least_one_on_random_psd(seed):
    rng = np.random.default_rng(seed)
    q = int(rng.integers(1, 5))
    m = rng.normal(size=(q + 1, q + 1))
    gamma = m @ m.T + 1e-6 * np.eye(q + 1)
    g = gamma_limit_estimate([gamma])
    assert are_ancova(g) >= 1.0 - 1e-12
