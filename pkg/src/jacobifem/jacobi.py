"""Jacobi polynomials, their normalization constants and Gauss-Jacobi quadrature.

Sign convention: polynomials are normalized so that the value at +1 equals
Gamma(p+alpha+1) / (Gamma(p+1) Gamma(alpha+1)).  Evaluation uses the
three-term recurrence, which is stable on [-1, 1]; all Gamma ratios are
computed in log space so degrees up to several hundred stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError


def check_weight_exponent(beta: float) -> float:
    """Validate a one-sided weight exponent (must exceed -1)."""
    beta = float(beta)
    if not beta > -1.0:
        raise ParameterError(f"weight exponent must be > -1, got {beta}")
    return beta


@dataclass(frozen=True)
class JacobiParams:
    """Exponent pair (alpha, beta) of the weight (1-x)^alpha (1+x)^beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        check_weight_exponent(self.alpha)
        check_weight_exponent(self.beta)


def sym(beta: float) -> JacobiParams:
    """Parameters of the symmetric weight (1-x^2)^beta."""
    return JacobiParams(beta, beta)


def _as_params(params) -> JacobiParams:
    if isinstance(params, JacobiParams):
        return params
    a, b = params
    return JacobiParams(float(a), float(b))


def jacobi_table(p: int, alpha: float, beta: float, x, nderiv: int = 0) -> np.ndarray:
    """Values (and derivatives up to ``nderiv``) of all Jacobi polynomials
    of degree 0..p at the points ``x``.

    Returns an array of shape (p+1, len(x), nderiv+1); entry [n, i, d] is the
    d-th derivative of the degree-n polynomial at x[i].
    """
    if p < 0:
        raise ParameterError(f"degree must be >= 0, got {p}")
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    out = np.zeros((p + 1, x.size, nderiv + 1))
    out[0, :, 0] = 1.0
    if p == 0:
        return out
    a, b = alpha, beta
    out[1, :, 0] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    if nderiv >= 1:
        out[1, :, 1] = 0.5 * (a + b + 2.0)
    for n in range(2, p + 1):
        c1 = 2.0 * n * (n + a + b) * (2.0 * n + a + b - 2.0)
        c2 = (2.0 * n + a + b - 1.0) * (a * a - b * b)
        c3 = (2.0 * n + a + b - 2.0) * (2.0 * n + a + b - 1.0) * (2.0 * n + a + b)
        c4 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * (2.0 * n + a + b)
        lin = c2 + c3 * x
        out[n, :, 0] = (lin * out[n - 1, :, 0] - c4 * out[n - 2, :, 0]) / c1
        for d in range(1, nderiv + 1):
            out[n, :, d] = (
                d * c3 * out[n - 1, :, d - 1]
                + lin * out[n - 1, :, d]
                - c4 * out[n - 2, :, d]
            ) / c1
    return out


def eval_jacobi(p: int, params, x):
    """Evaluate the degree-p Jacobi polynomial for the given weight pair."""
    params = _as_params(params)
    if p < 0:
        raise ParameterError(f"degree must be >= 0, got {p}")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    vals = jacobi_table(p, params.alpha, params.beta, x_arr)[p, :, 0]
    return vals[0] if np.isscalar(x) or np.ndim(x) == 0 else vals.reshape(np.shape(x))


def jacobi_series(coeffs, params, x, deriv: int = 0):
    """Evaluate sum_i coeffs[i] * J_i at ``x`` (or its ``deriv``-th derivative)."""
    params = _as_params(params)
    coeffs = np.asarray(coeffs, dtype=float)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    tab = jacobi_table(len(coeffs) - 1, params.alpha, params.beta, x_arr, deriv)
    vals = coeffs @ tab[:, :, deriv]
    return vals[0] if np.ndim(x) == 0 else vals.reshape(np.shape(x))


def jacobi_at_one(p: int, alpha: float) -> float:
    """Endpoint value of the degree-p polynomial at x = +1."""
    return float(np.exp(gammaln(p + alpha + 1.0) - gammaln(p + 1.0) - gammaln(alpha + 1.0)))


def jacobi_endpoints(p: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Values of the symmetric-weight polynomials of degree 0..p at -1 and +1."""
    degrees = np.arange(p + 1)
    at_one = np.exp(gammaln(degrees + beta + 1.0) - gammaln(degrees + 1.0) - gammaln(beta + 1.0))
    at_minus_one = at_one * (-1.0) ** degrees
    return at_minus_one, at_one


def _deriv_prefactor(p: int, k: int, beta: float) -> float:
    # 2^{-k} Gamma(p+2b+k+1)/Gamma(p+2b+1); valid for p >= 1, beta > -1
    return float(2.0 ** (-k) * np.exp(gammaln(p + 2.0 * beta + k + 1.0) - gammaln(p + 2.0 * beta + 1.0)))


def eval_jacobi_deriv(p: int, k: int, beta: float, x):
    """k-th derivative of the symmetric-weight Jacobi polynomial of degree p."""
    check_weight_exponent(beta)
    if k < 0:
        raise ParameterError(f"derivative order must be >= 0, got {k}")
    if p < 0:
        raise ParameterError(f"degree must be >= 0, got {p}")
    if k > p:
        return np.zeros(np.shape(x)) if np.ndim(x) > 0 else 0.0
    if k == 0:
        return eval_jacobi(p, sym(beta), x)
    fac = _deriv_prefactor(p, k, beta)
    return fac * eval_jacobi(p - k, sym(beta + k), x)


def gamma_p(beta: float, p: int) -> float:
    """Squared weighted L2 norm of the symmetric-weight polynomial of degree p."""
    check_weight_exponent(beta)
    if p < 0:
        raise ParameterError(f"degree must be >= 0, got {p}")
    if p == 0:
        # (2p+2b+1)*Gamma(p+2b+1) folded into Gamma(2b+2), which is safe near b = -1/2
        lg = (2.0 * beta + 1.0) * np.log(2.0) + 2.0 * gammaln(beta + 1.0) - gammaln(2.0 * beta + 2.0)
    else:
        lg = (
            (2.0 * beta + 1.0) * np.log(2.0)
            + 2.0 * gammaln(p + beta + 1.0)
            - np.log(2.0 * p + 2.0 * beta + 1.0)
            - gammaln(p + 1.0)
            - gammaln(p + 2.0 * beta + 1.0)
        )
    return float(np.exp(lg))


def gamma_pk(beta: float, p: int, k: int) -> float:
    """Squared weighted L2 norm of the k-th derivative of the degree-p polynomial,
    taken against the weight with exponent beta + k."""
    check_weight_exponent(beta)
    if k < 0 or k > p:
        raise ParameterError(f"need 0 <= k <= p, got k={k}, p={p}")
    if k == 0:
        return gamma_p(beta, p)
    lg = (
        (2.0 * beta + 1.0) * np.log(2.0)
        + gammaln(p + 2.0 * beta + k + 1.0)
        + 2.0 * gammaln(p + beta + 1.0)
        - np.log(2.0 * p + 2.0 * beta + 1.0)
        - gammaln(p + 1.0 - k)
        - 2.0 * gammaln(p + 2.0 * beta + 1.0)
    )
    return float(np.exp(lg))


def gamma_ratio(n: int, alpha: float) -> float:
    """Gamma(n+alpha) / (Gamma(n) n^alpha); tends to 1 as n grows."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if n + alpha <= 0.0:
        raise ParameterError(f"n + alpha must be positive, got {n + alpha}")
    return float(np.exp(gammaln(n + alpha) - gammaln(n) - alpha * np.log(n)))


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Jacobi nodes/weights, exact for polynomials of degree <= exactness."""

    nodes: np.ndarray
    weights: np.ndarray
    params: JacobiParams
    exactness: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def gauss_jacobi_rule(n: int, params) -> QuadRule:
    """n-point Gauss rule for the weight (1-x)^alpha (1+x)^beta on (-1, 1).

    Built from the symmetric tridiagonal recurrence-coefficient eigenproblem;
    nodes are machine-precision eigenvalues, weights are positive.
    """
    params = _as_params(params)
    if n < 1:
        raise ParameterError(f"node count must be >= 1, got {n}")
    a, b = params.alpha, params.beta
    mu0 = float(np.exp(
        (a + b + 1.0) * np.log(2.0) + gammaln(a + 1.0) + gammaln(b + 1.0) - gammaln(a + b + 2.0)
    ))
    diag = np.zeros(n)
    offd = np.zeros(max(n - 1, 0))
    diag[0] = (b - a) / (a + b + 2.0)
    for k in range(1, n):
        s = 2.0 * k + a + b
        diag[k] = (b * b - a * a) / (s * (s + 2.0))
        if k == 1:
            bk = 4.0 * (1.0 + a) * (1.0 + b) / ((a + b + 2.0) ** 2 * (a + b + 3.0))
        else:
            bk = (
                4.0 * k * (k + a) * (k + b) * (k + a + b)
                / (s * s * (s + 1.0) * (s - 1.0))
            )
        offd[k - 1] = np.sqrt(bk)
    if n == 1:
        nodes = diag.copy()
        weights = np.array([mu0])
    else:
        tri = np.diag(diag) + np.diag(offd, -1) + np.diag(offd, 1)
        evals, evecs = np.linalg.eigh(tri)
        order = np.argsort(evals)
        nodes = evals[order]
        weights = mu0 * evecs[0, order] ** 2
    return QuadRule(nodes=nodes, weights=weights, params=params, exactness=2 * n - 1)
