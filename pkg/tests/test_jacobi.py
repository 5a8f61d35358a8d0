"""Polynomial evaluation, normalization constants and quadrature."""

import numpy as np
import pytest
from scipy.special import eval_jacobi as scipy_jacobi
from scipy.special import gammaln, roots_jacobi

from jacobifem.errors import ParameterError
from jacobifem.jacobi import (
    JacobiParams,
    eval_jacobi,
    eval_jacobi_deriv,
    gamma_p,
    gamma_pk,
    gamma_ratio,
    gauss_jacobi_rule,
    jacobi_table,
    sym,
)

BETAS = [-0.7, -0.4, 0.0, 0.51, 0.6, 0.74]


class TestEvalJacobi:
    def test_degree_zero_is_one(self):
        x = np.linspace(-1, 1, 11)
        for beta in BETAS:
            assert np.all(eval_jacobi(0, sym(beta), x) == 1.0)

    @pytest.mark.parametrize("beta", BETAS)
    def test_endpoint_value_degree_one(self, beta):
        # value at +1 is beta + 1 for the symmetric weight
        assert eval_jacobi(1, sym(beta), 1.0) == pytest.approx(beta + 1.0, rel=1e-14)

    def test_legendre_value(self):
        # P_2(x) = (3x^2 - 1)/2, so P_2(0.5) = -0.125
        assert eval_jacobi(2, (0.0, 0.0), 0.5) == pytest.approx(-0.125, abs=1e-15)

    def test_against_scipy(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-1, 1, 13)
        for a, b in [(-0.6, -0.6), (0.6, 0.6), (1.4, -0.6), (0.51, 0.51)]:
            for p in [0, 1, 2, 5, 11, 20]:
                mine = eval_jacobi(p, (a, b), x)
                ref = scipy_jacobi(p, a, b, x)
                assert np.allclose(mine, ref, rtol=1e-12, atol=1e-13)

    def test_invalid_params(self):
        with pytest.raises(ParameterError):
            JacobiParams(-1.0, 0.0)
        with pytest.raises(ParameterError):
            eval_jacobi(-1, sym(0.0), 0.0)

    @pytest.mark.parametrize("beta", BETAS)
    def test_endpoint_symmetry(self, beta):
        for p in range(0, 21):
            left = eval_jacobi(p, sym(beta), -1.0)
            right = eval_jacobi(p, sym(beta), 1.0)
            assert abs(left) == pytest.approx(abs(right), rel=1e-13)


class TestDerivatives:
    def test_k_zero_identity(self):
        x = np.linspace(-1, 1, 7)
        for beta in (-0.6, 0.6):
            for p in range(0, 8):
                assert np.allclose(
                    eval_jacobi_deriv(p, 0, beta, x), eval_jacobi(p, sym(beta), x)
                )

    def test_over_differentiation_is_zero(self):
        assert eval_jacobi_deriv(3, 4, 0.2, 0.3) == 0.0
        assert np.all(eval_jacobi_deriv(2, 5, -0.5, np.linspace(-1, 1, 5)) == 0.0)

    def test_negative_order_rejected(self):
        with pytest.raises(ParameterError):
            eval_jacobi_deriv(3, -1, 0.0, 0.0)

    def test_legendre_derivative(self):
        x = np.linspace(-1, 1, 9)
        assert np.allclose(eval_jacobi_deriv(2, 1, 0.0, x), 3.0 * x, atol=1e-14)

    @pytest.mark.parametrize("beta", [-0.6, 0.3])
    def test_against_polynomial_differentiation(self, beta):
        # fit the exact polynomial through Chebyshev nodes, differentiate it
        for p in range(1, 9):
            nodes = np.cos(np.pi * (np.arange(p + 3) + 0.5) / (p + 3))
            vals = eval_jacobi(p, sym(beta), nodes)
            poly = np.polynomial.Polynomial.fit(nodes, vals, p)
            for k in (1, 2):
                x = np.linspace(-0.9, 0.9, 5)
                want = poly.deriv(k)(x)
                got = eval_jacobi_deriv(p, k, beta, x)
                assert np.allclose(got, want, rtol=1e-9, atol=1e-9)


class TestGammaConstants:
    def test_gamma_p_frozen_values(self):
        assert gamma_p(0.0, 0) == pytest.approx(2.0, rel=1e-15)
        assert gamma_p(0.0, 2) == pytest.approx(0.4, rel=1e-14)
        for p in range(0, 9):
            assert gamma_p(0.0, p) == pytest.approx(2.0 / (2 * p + 1), rel=1e-13)

    @pytest.mark.parametrize("beta", BETAS)
    def test_gamma_p_zero_is_weight_mass(self, beta):
        x, w = roots_jacobi(12, beta, beta)
        assert gamma_p(beta, 0) == pytest.approx(np.sum(w), rel=1e-13)

    def test_gamma_pk_reduces_to_gamma_p(self):
        for beta in BETAS:
            for p in range(0, 12):
                assert gamma_pk(beta, p, 0) == gamma_p(beta, p)

    def test_gamma_pk_frozen_value(self):
        # derivative of P_2 is 3x; integral of 9x^2 (1-x^2) dx = 2.4
        assert gamma_pk(0.0, 2, 1) == pytest.approx(2.4, rel=1e-14)

    def test_gamma_pk_rejects_bad_order(self):
        with pytest.raises(ParameterError):
            gamma_pk(0.0, 2, 3)
        with pytest.raises(ParameterError):
            gamma_pk(-1.2, 2, 1)

    @pytest.mark.parametrize("beta", [-0.7, 0.0, 0.6])
    def test_gamma_pk_against_quadrature(self, beta):
        for p in range(1, 9):
            for k in range(1, min(3, p) + 1):
                x, w = roots_jacobi(p + 4, beta + k, beta + k)
                fac = 2.0 ** (-k) * np.exp(
                    gammaln(p + 2 * beta + k + 1) - gammaln(p + 2 * beta + 1)
                )
                vals = fac * scipy_jacobi(p - k, beta + k, beta + k, x)
                assert gamma_pk(beta, p, k) == pytest.approx(
                    float(np.sum(w * vals**2)), rel=1e-12
                )

    def test_gamma_ratio_trivia(self):
        for n in (1, 5, 100):
            assert gamma_ratio(n, 0.0) == pytest.approx(1.0, abs=1e-14)
            assert gamma_ratio(n, 1.0) == pytest.approx(1.0, abs=1e-13)
        assert gamma_ratio(1000, 0.6) == pytest.approx(1.0, abs=1e-3)
        with pytest.raises(ParameterError):
            gamma_ratio(0, 0.5)
        with pytest.raises(ParameterError):
            gamma_ratio(1, -1.5)

    def test_gamma_p_times_p_window_per_beta(self):
        for beta in (-0.9, -0.4, 0.4, 0.75):
            vals = [gamma_p(beta, p) * p for p in range(1, 201)]
            assert max(vals) / min(vals) < 10.0


class TestGaussJacobi:
    def test_midpoint_rule(self):
        rule = gauss_jacobi_rule(1, (0.0, 0.0))
        assert rule.nodes[0] == pytest.approx(0.0, abs=1e-15)
        assert rule.weights[0] == pytest.approx(2.0, rel=1e-15)
        assert rule.exactness == 1

    def test_invalid_count(self):
        with pytest.raises(ParameterError):
            gauss_jacobi_rule(0, (0.0, 0.0))

    @pytest.mark.parametrize("beta", BETAS)
    def test_weight_sum_and_node_layout(self, beta):
        rule = gauss_jacobi_rule(9, sym(beta))
        assert np.sum(rule.weights) == pytest.approx(gamma_p(beta, 0), rel=1e-13)
        assert np.all(rule.weights > 0)
        assert np.all(np.diff(rule.nodes) > 0)
        assert rule.nodes[0] > -1.0 and rule.nodes[-1] < 1.0

    @pytest.mark.parametrize("params", [(-0.6, 0.4), (0.51, 0.51), (1.4, -0.6)])
    def test_monomial_exactness_against_oracle(self, params):
        # 4n-node rule from an independent implementation as the reference
        a, b = params
        for n in (2, 5, 9):
            rule = gauss_jacobi_rule(n, params)
            xo, wo = roots_jacobi(4 * n, a, b)
            for j in range(0, 2 * n):
                mine = float(np.dot(rule.weights, rule.nodes**j))
                ref = float(np.dot(wo, xo**j))
                assert mine == pytest.approx(ref, rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("beta", [-0.7, 0.0, 0.6])
    def test_orthogonality(self, beta):
        nmax = 12
        rule = gauss_jacobi_rule(nmax + 2, sym(beta))
        tab = jacobi_table(nmax, beta, beta, rule.nodes)[:, :, 0]
        gram = (tab * rule.weights) @ tab.T
        gams = np.array([gamma_p(beta, p) for p in range(nmax + 1)])
        scale = np.sqrt(np.outer(gams, gams))
        assert np.max(np.abs(gram - np.diag(gams)) / scale) < 1e-12
