"""Constructive interpolation toolkit: boundary-decay polynomial, vertex
functions, edge extensions, local and global interpolants, and the weighted
edge lift used by the estimator's efficiency analysis.

All constructions live on the reference square; the connection to an element
is its affine map, with edge polynomials carried in 1D Jacobi coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .jacobi import jacobi_endpoints, jacobi_series, sym
from .mesh import ParallelogramMesh, geometry
from .spaces import (
    TensorCoeffs,
    cached_rule,
    edge_series,
    expand,
    expand_1d,
    multiply,
    trace_to_edge,
    _gammas,
)

_SIDE_NAMES = ("bottom", "right", "top", "left")


def flip_1d(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of w(-t) from those of w(t) (symmetric-weight basis)."""
    coeffs = np.asarray(coeffs, dtype=float)
    signs = (-1.0) ** np.arange(len(coeffs))
    return coeffs * signs


def boundary_decay_poly(p: int, beta: float) -> np.ndarray:
    """Degree-p polynomial with g(-1) = 1, g(1) = 0 of minimal weighted L2 norm.

    Minimizing sum b_i^2 gamma_i subject to the two endpoint constraints gives
    the reproducing-kernel solution; its norm decays like (p+1)^{-(1+beta)},
    the sharp rate for polynomials pinned to 1 at an endpoint.
    """
    if p < 1:
        raise ParameterError(f"degree must be >= 1, got {p}")
    at_m1, at_p1 = jacobi_endpoints(p, beta)
    g = _gammas(beta, p)
    a = float(np.sum(at_m1 * at_m1 / g))
    b = float(np.sum(at_m1 * at_p1 / g))
    det = a * a - b * b
    lam = a / det
    mu = -b / det
    return (lam * at_m1 + mu * at_p1) / g


_CORNER_SIGNS = ((-1, -1), (1, -1), (1, 1), (-1, 1))


def vertex_function(slot: int, p: int, beta: float) -> TensorCoeffs:
    """Tensor product of boundary-decay polynomials equal to 1 at the corner
    in the given slot (0..3, counter-clockwise from (-1,-1)) and 0 at the
    other three corners of the reference square."""
    if slot not in (0, 1, 2, 3):
        raise ParameterError(f"vertex slot must be 0..3, got {slot}")
    g = boundary_decay_poly(p, beta)
    sx, sy = _CORNER_SIGNS[slot]
    gx = g if sx < 0 else flip_1d(g)
    gy = g if sy < 0 else flip_1d(g)
    return TensorCoeffs(beta, np.outer(gx, gy))


def _pad_1d(coeffs: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n + 1)
    out[: len(coeffs)] = coeffs
    return out


def edge_lift(w: np.ndarray, side: int, p: int, beta: float) -> TensorCoeffs:
    """Extension of an edge polynomial w (vanishing at the edge endpoints)
    into the reference square, zero on the three other edges.

    ``w`` is given in the local edge coordinate of ``side`` (0 bottom, 1 right,
    2 top, 3 left); the extension is w times the boundary-decay polynomial in
    the transverse direction.
    """
    w = np.asarray(w, dtype=float)
    if len(w) - 1 > p:
        raise ParameterError(f"edge polynomial degree {len(w) - 1} exceeds p = {p}")
    ends = np.abs([edge_series(w, beta, -1.0), edge_series(w, beta, 1.0)])
    if np.max(ends) > 1e-10:
        raise ParameterError(
            f"edge polynomial must vanish at the endpoints (got {np.max(ends):.3e})"
        )
    g = boundary_decay_poly(p, beta)
    wp = _pad_1d(w, p)
    if side == 0:
        c = np.outer(wp, g)
    elif side == 1:
        c = np.outer(flip_1d(g), wp)
    elif side == 2:
        c = np.outer(wp, flip_1d(g))
    elif side == 3:
        c = np.outer(g, wp)
    else:
        raise ParameterError(f"side must be 0..3, got {side}")
    return TensorCoeffs(beta, c)


@dataclass
class PiecewisePoly:
    """Per-element tensor expansions; parts maps element id -> TensorCoeffs."""

    mesh: ParallelogramMesh
    parts: dict
    continuous: bool = False

    def evaluate(self, k: int, points: np.ndarray, dx: int = 0, dy: int = 0):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.parts[k].evaluate(points[:, 0], points[:, 1], dx=dx, dy=dy)

    def edge_trace(self, k: int, side: int, to_global: bool = True) -> np.ndarray:
        """Trace on a local side as 1D coefficients; ``to_global`` rewrites
        them in the global edge coordinate (from lower to higher vertex id)."""
        tr = trace_to_edge(self.parts[k], _SIDE_NAMES[side])
        if to_global and self.mesh.elem_edge_sign[k, side] < 0:
            tr = flip_1d(tr)
        return tr

    def continuity_mismatch(self, n_samples: int = 50) -> float:
        """Largest pointwise trace gap over shared edges with both sides present."""
        t = np.cos(np.pi * (np.arange(n_samples) + 0.5) / n_samples)
        worst = 0.0
        for eid, e in enumerate(self.mesh.edges):
            if e.boundary or not all(k in self.parts for k in e.elems):
                continue
            traces = []
            for k in e.elems:
                side = int(np.where(self.mesh.elem_edges[k] == eid)[0][0])
                traces.append(edge_series(self.edge_trace(k, side), self.parts[k].beta, t))
            worst = max(worst, float(np.max(np.abs(traces[0] - traces[1]))))
        return worst

    def boundary_max(self, n_samples: int = 50) -> float:
        """Largest absolute trace value over domain-boundary edges."""
        t = np.cos(np.pi * (np.arange(n_samples) + 0.5) / n_samples)
        worst = 0.0
        for eid, e in enumerate(self.mesh.edges):
            if not e.boundary or e.elems[0] not in self.parts:
                continue
            k = e.elems[0]
            side = int(np.where(self.mesh.elem_edges[k] == eid)[0][0])
            vals = edge_series(self.edge_trace(k, side), self.parts[k].beta, t)
            worst = max(worst, float(np.max(np.abs(vals))))
        return worst


def _check_interp_exponent(beta: float) -> None:
    if not (-1.0 < beta < -0.5):
        raise ParameterError(
            f"interpolation requires a weight exponent in (-1, -1/2), got {beta}"
        )


def element_projection(mesh: ParallelogramMesh, k: int, u: Callable, p: int,
                       beta: float, quad_points: Optional[int] = None) -> TensorCoeffs:
    """Degree-p tensor Jacobi projection of u pulled back to element k."""
    amap = geometry(mesh, k)

    def uhat(X, Y):
        pts = amap.apply(np.column_stack([np.ravel(X), np.ravel(Y)]))
        return np.asarray(u(pts[:, 0], pts[:, 1]), dtype=float).reshape(np.shape(X))

    return expand(uhat, beta, p, quad_points)


def local_interpolant(mesh: ParallelogramMesh, vertex: int, u: Callable, p: int,
                      beta: float) -> PiecewisePoly:
    """Patch interpolant around a vertex: per-element projection plus vertex
    corrections, edge-matched across the patch-interior edges and zeroed on
    domain-boundary edges of the patch.

    Patch edges are processed in ascending global edge index; each correction
    is supported on the adjacent element with the lower index.
    """
    _check_interp_exponent(beta)
    if p < 1:
        raise ParameterError(f"degree must be >= 1, got {p}")
    patch = mesh.vertex_elems[vertex]
    parts = {}
    for k in patch:
        proj = element_projection(mesh, k, u, p, beta)
        corners_phys = mesh.vertices[mesh.elements[k]]
        uvals = np.asarray(u(corners_phys[:, 0], corners_phys[:, 1]), dtype=float)
        delta = uvals - proj.corner_values()
        phi = proj
        for l in range(4):
            phi = phi + vertex_function(l, p, beta).scaled(delta[l])
        parts[k] = phi

    # continuity across edges meeting at the vertex
    interior = sorted(
        eid for eid, e in enumerate(mesh.edges)
        if vertex in e.verts and e.interior
    )
    for eid in interior:
        e = mesh.edges[eid]
        k1, k2 = min(e.elems), max(e.elems)
        traces = {}
        for k in (k1, k2):
            side = int(np.where(mesh.elem_edges[k] == eid)[0][0])
            trk = trace_to_edge(parts[k], _SIDE_NAMES[side])
            if mesh.elem_edge_sign[k, side] < 0:
                trk = flip_1d(trk)
            traces[k] = trk
        side1 = int(np.where(mesh.elem_edges[k1] == eid)[0][0])
        w_global = traces[k1] - traces[k2]
        w_local = flip_1d(w_global) if mesh.elem_edge_sign[k1, side1] < 0 else w_global
        parts[k1] = parts[k1] - edge_lift(w_local, side1, p, beta)

    # zero trace on domain-boundary edges of the patch
    boundary = sorted(
        (mesh.elem_edges[k, s], k, s)
        for k in patch
        for s in range(4)
        if mesh.edges[mesh.elem_edges[k, s]].boundary
    )
    for _, k, s in boundary:
        w_local = trace_to_edge(parts[k], _SIDE_NAMES[s])
        parts[k] = parts[k] - edge_lift(w_local, s, p, beta)

    return PiecewisePoly(mesh, parts)


def _hat_1d(beta: float, which: int) -> np.ndarray:
    # (1 -/+ x)/2 in the Jacobi basis: x = J_1 / (beta + 1)
    s = -1.0 if which == 0 else 1.0
    return np.array([0.5, s * 0.5 / (beta + 1.0)])


def hat_function(slot: int, beta: float) -> TensorCoeffs:
    """Bilinear hat equal to 1 at the corner in the given slot."""
    sx, sy = _CORNER_SIGNS[slot]
    hx = _hat_1d(beta, 0 if sx < 0 else 1)
    hy = _hat_1d(beta, 0 if sy < 0 else 1)
    return TensorCoeffs(beta, np.outer(hx, hy))


def global_interpolant(mesh: ParallelogramMesh, degrees: np.ndarray, u: Callable,
                       beta: float) -> PiecewisePoly:
    """Partition-of-unity interpolant: bilinear hats times the local patch
    interpolants built with degree p_V - 1, giving a continuous piecewise
    polynomial that vanishes on the domain boundary."""
    _check_interp_exponent(beta)
    degrees = np.asarray(degrees, dtype=int)
    p_V = np.array([
        min(int(degrees[k]) for k in ks) if ks else 0
        for ks in mesh.vertex_elems
    ])
    if np.any(p_V < 2):
        raise ParameterError(
            "global interpolant needs degree >= 2 everywhere (local degree is p_V - 1)"
        )
    parts = {
        k: TensorCoeffs(beta, np.zeros((int(degrees[k]) + 1, int(degrees[k]) + 1)))
        for k in range(mesh.n_elements)
    }
    for v in range(mesh.n_vertices):
        local = local_interpolant(mesh, v, u, int(p_V[v]) - 1, beta)
        for k in local.parts:
            slot = int(np.where(mesh.elements[k] == v)[0][0])
            contrib = multiply(hat_function(slot, beta), local.parts[k])
            parts[k] = parts[k] + contrib
    return PiecewisePoly(mesh, parts, continuous=True)


# per local side: (tau axis, g axis, sign of the g argument)
_LIFT_LAYOUT = (
    (0, 1, +1.0),  # bottom: P(x) (1-x^2)^b g(y)
    (1, 0, -1.0),  # right:  P(y) (1-y^2)^b g(-x)
    (0, 1, -1.0),  # top:    P(x) (1-x^2)^b g(-y)
    (1, 0, +1.0),  # left:   P(y) (1-y^2)^b g(x)
)


@dataclass
class JumpLift:
    """Weighted lift of an edge polynomial into the two neighbors of an
    interior edge: trace P(t) (1-t^2)^beta on the edge, zero on the rest of
    the patch boundary.  Not a polynomial; carried as closures with analytic
    gradients, with all weighted norms reducible to exact Gauss-Jacobi sums.
    """

    mesh: ParallelogramMesh
    edge_id: int
    beta: float
    coeffs: np.ndarray  # edge polynomial P in the global edge coordinate
    g: np.ndarray = field(init=False)
    sides: dict = field(init=False)

    def __post_init__(self):
        if not (0.5 < self.beta < 1.0):
            raise ParameterError(
                f"jump lift requires a weight exponent in (1/2, 1), got {self.beta}"
            )
        e = self.mesh.edges[self.edge_id]
        if e.boundary:
            raise ParameterError(f"edge {self.edge_id} is a boundary edge")
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        p = len(self.coeffs) - 1
        self.g = boundary_decay_poly(max(p, 1), -self.beta)
        self.sides = {}
        for k in e.elems:
            side = int(np.where(self.mesh.elem_edges[k] == self.edge_id)[0][0])
            self.sides[k] = (side, int(self.mesh.elem_edge_sign[k, side]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def elements(self):
        return self.mesh.edges[self.edge_id].elems

    def _local_coeffs(self, k: int):
        side, sgn = self.sides[k]
        ploc = self.coeffs if sgn > 0 else flip_1d(self.coeffs)
        return side, ploc

    def value_ref(self, k: int, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        side, ploc = self._local_coeffs(k)
        tau_ax, g_ax, g_sign = _LIFT_LAYOUT[side]
        tau = points[:, tau_ax]
        nu = points[:, g_ax]
        pvals = edge_series(ploc, self.beta, tau)
        gvals = edge_series(self.g, -self.beta, g_sign * nu)
        return pvals * (1.0 - tau**2) ** self.beta * gvals

    def grad_ref(self, k: int, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        side, ploc = self._local_coeffs(k)
        tau_ax, g_ax, g_sign = _LIFT_LAYOUT[side]
        tau = points[:, tau_ax]
        nu = points[:, g_ax]
        b = self.beta
        pvals = edge_series(ploc, b, tau)
        pder = edge_series(ploc, b, tau, deriv=1)
        gvals = edge_series(self.g, -b, g_sign * nu)
        gder = g_sign * edge_series(self.g, -b, g_sign * nu, deriv=1)
        wfac = (1.0 - tau**2) ** b
        # d/dtau [P (1-t^2)^b] = (1-t^2)^{b-1} (P' (1-t^2) - 2 b t P)
        dtau = (1.0 - tau**2) ** (b - 1.0) * (pder * (1.0 - tau**2) - 2.0 * b * tau * pvals) * gvals
        dnu = pvals * wfac * gder
        out = np.zeros_like(points)
        out[:, tau_ax] = dtau
        out[:, g_ax] = dnu
        return out

    def grad_phys(self, k: int, points: np.ndarray) -> np.ndarray:
        return geometry(self.mesh, k).push_gradient(self.grad_ref(k, points))

    def _tau_integrals(self):
        b = self.beta
        p = self.degree
        _, ploc = self._local_coeffs(self.elements()[0])
        rb = cached_rule(p + 2, b, b)
        i_p = float(np.dot(rb.weights, edge_series(ploc, b, rb.nodes) ** 2))
        rbm = cached_rule(p + 3, b - 1.0, b - 1.0)
        t = rbm.nodes
        bracket = (
            edge_series(ploc, b, t, deriv=1) * (1.0 - t**2)
            - 2.0 * b * t * edge_series(ploc, b, t)
        )
        i_pb = float(np.dot(rbm.weights, bracket**2))
        return i_p, i_pb

    def _g_integrals(self):
        b = self.beta
        q = len(self.g) + 2
        rg = cached_rule(q, -b, -b)
        i_g = float(np.dot(rg.weights, edge_series(self.g, -b, rg.nodes) ** 2))
        rgd = cached_rule(q, 1.0 - b, 1.0 - b)
        i_gd = float(np.dot(rgd.weights, edge_series(self.g, -b, rgd.nodes, deriv=1) ** 2))
        return i_g, i_gd

    def norm_h0(self) -> float:
        """Broken norm over the two-element patch, weight exponent -beta, k=0."""
        i_p, _ = self._tau_integrals()
        i_g, _ = self._g_integrals()
        return float(np.sqrt(2.0 * i_p * i_g))

    def norm_h1(self) -> float:
        """Broken norm over the patch, weight exponent -beta, k=1 (full norm)."""
        i_p, i_pb = self._tau_integrals()
        i_g, i_gd = self._g_integrals()
        per_elem = i_p * i_g + i_pb * i_g + i_p * i_gd
        return float(np.sqrt(2.0 * per_elem))


def jump_lift(coeffs: np.ndarray, edge_id: int, mesh: ParallelogramMesh,
              beta: float) -> JumpLift:
    """Lift an edge polynomial (global edge coordinate, symmetric-weight Jacobi
    coefficients for exponent beta) into the two elements sharing the edge."""
    return JumpLift(mesh=mesh, edge_id=edge_id, beta=beta, coeffs=np.asarray(coeffs, dtype=float))
