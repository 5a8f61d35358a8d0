"""Tensor Jacobi-Fourier expansions, projections, weighted norms and traces
on the reference square Q = (-1, 1)^2."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import IntegrabilityError, ParameterError
from .jacobi import (
    QuadRule,
    check_weight_exponent,
    gamma_p,
    gamma_pk,
    gauss_jacobi_rule,
    jacobi_endpoints,
    jacobi_table,
    sym,
)


@lru_cache(maxsize=None)
def cached_rule(n: int, alpha: float, beta: float) -> QuadRule:
    return gauss_jacobi_rule(n, (alpha, beta))


@lru_cache(maxsize=None)
def _gammas(beta: float, n: int) -> np.ndarray:
    return np.array([gamma_p(beta, i) for i in range(n + 1)])


@lru_cache(maxsize=None)
def _gammas_k(beta: float, n: int, k: int) -> np.ndarray:
    # entries below degree k are unused; keep them zero
    out = np.zeros(n + 1)
    for i in range(k, n + 1):
        out[i] = gamma_pk(beta, i, k)
    return out


@dataclass(frozen=True)
class TensorCoeffs:
    """Coefficients c[i, j] of a function sum c_ij J_i(x) J_j(y) on Q,
    in the symmetric-weight Jacobi basis with exponent beta."""

    beta: float
    c: np.ndarray

    def __post_init__(self):
        check_weight_exponent(self.beta)
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ParameterError(f"coefficient array must be square 2D, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ParameterError("coefficient array contains non-finite entries")
        object.__setattr__(self, "c", c)

    @property
    def cutoff(self) -> int:
        return self.c.shape[0] - 1

    def evaluate(self, x, y, dx: int = 0, dy: int = 0):
        """Pointwise values (or mixed derivatives) at same-shape arrays x, y."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        y_arr = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        n = self.cutoff
        tx = jacobi_table(n, self.beta, self.beta, x_arr, dx)[:, :, dx]
        ty = jacobi_table(n, self.beta, self.beta, y_arr, dy)[:, :, dy]
        vals = np.einsum("ij,ia,ja->a", self.c, tx, ty)
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(vals[0])
        return vals.reshape(np.shape(x))

    def evaluate_grid(self, x1d, y1d, dx: int = 0, dy: int = 0) -> np.ndarray:
        """Values on the tensor grid x1d x y1d, shape (len(x1d), len(y1d))."""
        x1d = np.asarray(x1d, dtype=float)
        y1d = np.asarray(y1d, dtype=float)
        n = self.cutoff
        tx = jacobi_table(n, self.beta, self.beta, x1d, dx)[:, :, dx]
        ty = jacobi_table(n, self.beta, self.beta, y1d, dy)[:, :, dy]
        return np.einsum("ij,ia,jb->ab", self.c, tx, ty)

    def corner_values(self) -> np.ndarray:
        """Values at the four corners, ordered (-1,-1), (1,-1), (1,1), (-1,1)."""
        xs = np.array([-1.0, 1.0, 1.0, -1.0])
        ys = np.array([-1.0, -1.0, 1.0, 1.0])
        return self.evaluate(xs, ys)

    def padded(self, cutoff: int) -> "TensorCoeffs":
        if cutoff < self.cutoff:
            raise ParameterError("padding target below current cutoff")
        c = np.zeros((cutoff + 1, cutoff + 1))
        c[: self.c.shape[0], : self.c.shape[1]] = self.c
        return TensorCoeffs(self.beta, c)

    def __add__(self, other: "TensorCoeffs") -> "TensorCoeffs":
        if abs(other.beta - self.beta) > 0.0:
            raise ParameterError("cannot add expansions with different weight exponents")
        n = max(self.cutoff, other.cutoff)
        return TensorCoeffs(self.beta, self.padded(n).c + other.padded(n).c)

    def __sub__(self, other: "TensorCoeffs") -> "TensorCoeffs":
        return self + other.scaled(-1.0)

    def scaled(self, a: float) -> "TensorCoeffs":
        return TensorCoeffs(self.beta, a * self.c)


def zeros(beta: float, cutoff: int) -> TensorCoeffs:
    return TensorCoeffs(beta, np.zeros((cutoff + 1, cutoff + 1)))


def expand(f: Callable, beta: float, cutoff: int, quad_points: Optional[int] = None) -> TensorCoeffs:
    """Tensor Jacobi-Fourier coefficients of f on Q by Gauss-Jacobi quadrature.

    Exact (to roundoff) whenever f is a polynomial of degree at most
    2*quad_points - 1 - cutoff in each variable.
    """
    check_weight_exponent(beta)
    q = cutoff + 10 if quad_points is None else quad_points
    if q < cutoff + 1:
        raise ParameterError(f"need quad_points >= cutoff+1 = {cutoff + 1}, got {q}")
    rule = cached_rule(q, beta, beta)
    X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    vals = np.asarray(f(X, Y), dtype=float)
    return expand_values(vals, beta, cutoff, rule)


def expand_values(vals: np.ndarray, beta: float, cutoff: int, rule: QuadRule) -> TensorCoeffs:
    """Expansion coefficients from values on the tensor grid of ``rule``."""
    tab = jacobi_table(cutoff, beta, beta, rule.nodes)[:, :, 0]
    wtab = tab * rule.weights
    g = _gammas(beta, cutoff)
    c = (wtab @ vals @ wtab.T) / np.outer(g, g)
    return TensorCoeffs(beta, c)


def expand_1d(f: Callable, beta: float, cutoff: int, quad_points: Optional[int] = None) -> np.ndarray:
    """1D Jacobi-Fourier coefficients of f on (-1, 1)."""
    check_weight_exponent(beta)
    q = cutoff + 10 if quad_points is None else quad_points
    if q < cutoff + 1:
        raise ParameterError(f"need quad_points >= cutoff+1 = {cutoff + 1}, got {q}")
    rule = cached_rule(q, beta, beta)
    vals = np.asarray(f(rule.nodes), dtype=float)
    tab = jacobi_table(cutoff, beta, beta, rule.nodes)[:, :, 0]
    return (tab * rule.weights) @ vals / _gammas(beta, cutoff)


def project(coeffs: TensorCoeffs, p: int) -> TensorCoeffs:
    """Truncate the expansion to degrees <= p per variable (idempotent)."""
    if p > coeffs.cutoff:
        raise ParameterError(f"cannot truncate at degree {p} > cutoff {coeffs.cutoff}")
    if p < 0:
        raise ParameterError(f"degree must be >= 0, got {p}")
    return TensorCoeffs(coeffs.beta, coeffs.c[: p + 1, : p + 1].copy())


def multiply(u: TensorCoeffs, v: TensorCoeffs) -> TensorCoeffs:
    """Exact polynomial product, re-expanded at the summed cutoff."""
    if abs(u.beta - v.beta) > 0.0:
        raise ParameterError("cannot multiply expansions with different weight exponents")
    n = u.cutoff + v.cutoff
    rule = cached_rule(n + 2, u.beta, u.beta)
    vals = u.evaluate_grid(rule.nodes, rule.nodes) * v.evaluate_grid(rule.nodes, rule.nodes)
    return expand_values(vals, u.beta, n, rule)


@dataclass(frozen=True)
class WeightSpec:
    """Which weighted Sobolev (semi)norm to take: order k in {0, 1}, exponent
    beta, and variant 'plain' (exponent beta+alpha per derivative order) or
    'tilde' (beta-alpha)."""

    k: int
    beta: float
    variant: str = "plain"

    def __post_init__(self):
        check_weight_exponent(self.beta)
        if self.k not in (0, 1):
            raise ParameterError(f"only k in {{0, 1}} is supported, got {self.k}")
        if self.variant not in ("plain", "tilde"):
            raise ParameterError(f"variant must be 'plain' or 'tilde', got {self.variant!r}")


@dataclass(frozen=True)
class ScalarField:
    """A function on Q given by callables; ``grad`` returns (d/dx, d/dy)."""

    value: Callable
    grad: Optional[Callable] = None


def _quad_term_sq(value_fn, ax: float, ay: float, q: int) -> float:
    """integral of value^2 (1-x^2)^ax (1-y^2)^ay over Q by tensor Gauss-Jacobi."""
    if ax <= -1.0 or ay <= -1.0:
        raise IntegrabilityError(f"weight exponents ({ax}, {ay}) are not integrable")
    rx = cached_rule(q, ax, ax)
    ry = cached_rule(q, ay, ay)
    X, Y = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
    vals = np.asarray(value_fn(X, Y), dtype=float)
    return float(np.einsum("a,b,ab->", rx.weights, ry.weights, vals**2))


def weighted_norm(obj, spec: WeightSpec, quad_points: Optional[int] = None, seminorm: bool = False) -> float:
    """Weighted Sobolev norm of a TensorCoeffs expansion or a ScalarField.

    Coefficient input at k <= 1 in the plain variant uses the exact series
    identities; everything else is tensor Gauss-Jacobi quadrature with the
    weight exponents matched term by term.
    """
    sign = +1.0 if spec.variant == "plain" else -1.0
    if isinstance(obj, TensorCoeffs):
        if abs(obj.beta - spec.beta) > 0.0:
            raise ParameterError("expansion exponent does not match the norm spec")
        if spec.variant == "plain":
            return _series_norm(obj, spec.k, seminorm)
        q = quad_points if quad_points is not None else obj.cutoff + 2
        total = 0.0
        if not (seminorm and spec.k == 1):
            total += _quad_term_sq(lambda X, Y: obj.evaluate(X, Y), spec.beta, spec.beta, q)
        if spec.k == 1:
            b1 = spec.beta + sign
            if b1 <= -1.0:
                raise IntegrabilityError(
                    f"tilde first-order weight exponent {b1} is not integrable"
                )
            total += _quad_term_sq(lambda X, Y: obj.evaluate(X, Y, dx=1), b1, spec.beta, q)
            total += _quad_term_sq(lambda X, Y: obj.evaluate(X, Y, dy=1), spec.beta, b1, q)
        return float(np.sqrt(total))

    if isinstance(obj, ScalarField):
        q = quad_points if quad_points is not None else 40
        if q < 2:
            raise ParameterError(f"quad_points too small: {q}")
        total = 0.0
        if not (seminorm and spec.k == 1):
            total += _quad_term_sq(obj.value, spec.beta, spec.beta, q)
        if spec.k == 1:
            if obj.grad is None:
                raise ParameterError("k=1 norm of a ScalarField requires a gradient callback")
            b1 = spec.beta + sign
            total += _quad_term_sq(lambda X, Y: obj.grad(X, Y)[0], b1, spec.beta, q)
            total += _quad_term_sq(lambda X, Y: obj.grad(X, Y)[1], spec.beta, b1, q)
        return float(np.sqrt(total))

    raise ParameterError(f"unsupported input type {type(obj)!r}")


def _series_norm(coeffs: TensorCoeffs, k: int, seminorm: bool) -> float:
    beta = coeffs.beta
    n = coeffs.cutoff
    g = _gammas(beta, n)
    total = 0.0
    if not (seminorm and k == 1):
        total += float(np.einsum("ij,i,j->", coeffs.c**2, g, g))
    if k == 1:
        g1 = _gammas_k(beta, n, 1)
        total += float(np.einsum("ij,i,j->", coeffs.c**2, g1, g))
        total += float(np.einsum("ij,i,j->", coeffs.c**2, g, g1))
    return float(np.sqrt(total))


def pullback_field(u: Callable, grad_u: Optional[Callable], amap) -> ScalarField:
    """ScalarField on Q for u composed with an element map; the gradient
    callback returns reference-coordinate partials of the pull-back."""

    def value(X, Y):
        pts = amap.apply(np.column_stack([np.ravel(X), np.ravel(Y)]))
        return np.asarray(u(pts[:, 0], pts[:, 1]), dtype=float).reshape(np.shape(X))

    grad = None
    if grad_u is not None:
        def grad(X, Y):
            shape = np.shape(X)
            pts = amap.apply(np.column_stack([np.ravel(X), np.ravel(Y)]))
            gx, gy = grad_u(pts[:, 0], pts[:, 1])
            gphys = np.column_stack([np.asarray(gx, float), np.asarray(gy, float)])
            gref = amap.pull_gradient(gphys)
            return gref[:, 0].reshape(shape), gref[:, 1].reshape(shape)

    return ScalarField(value=value, grad=grad)


_EDGES = ("bottom", "top", "left", "right")


def trace_to_edge(coeffs: TensorCoeffs, edge: str) -> np.ndarray:
    """1D expansion coefficients of the trace on an edge of Q.

    The edge coordinate runs in x for bottom/top and in y for left/right.
    """
    if edge not in _EDGES:
        raise ParameterError(f"edge must be one of {_EDGES}, got {edge!r}")
    at_m1, at_p1 = jacobi_endpoints(coeffs.cutoff, coeffs.beta)
    if edge == "bottom":
        return coeffs.c @ at_m1
    if edge == "top":
        return coeffs.c @ at_p1
    if edge == "left":
        return coeffs.c.T @ at_m1
    return coeffs.c.T @ at_p1


def edge_norm_h0(b: np.ndarray, beta: float) -> float:
    """Weighted L2 norm on (-1,1) of a 1D Jacobi expansion."""
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum(b**2 * _gammas(beta, len(b) - 1))))


def edge_series(b: np.ndarray, beta: float, t, deriv: int = 0):
    """Evaluate a 1D Jacobi expansion on the edge coordinate."""
    b = np.asarray(b, dtype=float)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    tab = jacobi_table(len(b) - 1, beta, beta, t_arr.ravel(), deriv)[:, :, deriv]
    vals = b @ tab
    return float(vals[0]) if np.ndim(t) == 0 else vals.reshape(np.shape(t))
