"""Residual a posteriori error estimator in Jacobi-weighted norms: interior
residuals, normal-derivative jumps, data oscillation, the global estimate,
and effectivity tracking against a computable weighted error surrogate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .fem import DiscreteSolution, DofMap, evaluate, energy_error
from .interpolation import _LIFT_LAYOUT, JumpLift, flip_1d, jump_lift
from .mesh import ParallelogramMesh, geometry
from .spaces import (
    TensorCoeffs,
    cached_rule,
    edge_series,
    expand_values,
    pullback_field,
    _gammas,
)


@dataclass(frozen=True)
class EstimatorParams:
    """Weight regime of the estimator: exponent beta = 1/2 + delta."""

    delta: float = 0.1
    load_projection_boost: int = 4

    def __post_init__(self):
        if not 0.0 < self.delta < 0.25:
            raise ParameterError(f"delta must lie in (0, 1/4), got {self.delta}")
        if self.load_projection_boost < 1:
            raise ParameterError("load_projection_boost must be >= 1")

    @property
    def beta(self) -> float:
        return 0.5 + self.delta


@dataclass
class EstimatorReport:
    """Per-element and per-edge indicator values plus the global quantities."""

    degrees: np.ndarray
    p_edge: np.ndarray
    eta_B: np.ndarray
    eta_E: np.ndarray
    eta_edge: np.ndarray  # zero on boundary edges
    osc_K: np.ndarray
    eta: float
    osc: float
    effectivity: Optional[float] = None

    @property
    def eta_K(self) -> np.ndarray:
        return np.sqrt(self.eta_B**2 + self.eta_E**2)

    def write_element_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("id,p_K,eta_B,eta_E,osc_K\n")
            for k in range(len(self.eta_B)):
                fh.write(
                    f"{k},{int(self.degrees[k])},{self.eta_B[k]:.17g},"
                    f"{self.eta_E[k]:.17g},{self.osc_K[k]:.17g}\n"
                )

    def write_edge_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("id,p_l,eta_l\n")
            for eid in range(len(self.eta_edge)):
                fh.write(f"{eid},{int(self.p_edge[eid])},{self.eta_edge[eid]:.17g}\n")


def project_load(f: Callable, mesh: ParallelogramMesh, k: int, p: int, beta: float,
                 quad_points: Optional[int] = None) -> TensorCoeffs:
    """Elementwise tensor Jacobi projection of the load at degree p."""
    amap = geometry(mesh, k)
    q = p + 10 if quad_points is None else quad_points
    rule = cached_rule(q, beta, beta)
    X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    pts = amap.apply(np.column_stack([X.ravel(), Y.ravel()]))
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float).reshape(q, q)
    return expand_values(vals, beta, p, rule)


def oscillation_norm(f: Callable, mesh: ParallelogramMesh, k: int, p: int, beta: float,
                     boost: int = 4) -> float:
    """Approximate weighted norm of f - f_p on element k: the part of the
    expansion between degrees p and p+boost plus a geometric tail estimate."""
    hi = project_load(f, mesh, k, p + boost, beta)
    g = _gammas(beta, hi.cutoff)
    gw = np.outer(g, g)
    csq = hi.c**2 * gw
    shells = np.zeros(boost)
    for m in range(p + 1, p + boost + 1):
        shells[m - p - 1] = csq[m, : m + 1].sum() + csq[: m + 1, m].sum() - csq[m, m]
    total = float(shells.sum())
    tail = 0.0
    if boost >= 2 and shells[-2] > 0.0 and shells[-1] > 0.0:
        rho = min(shells[-1] / shells[-2], 0.9)
        tail = shells[-1] * rho / (1.0 - rho)
    return float(np.sqrt(total + tail))


def _edge_jump_values(sol: DiscreteSolution, eid: int, t: np.ndarray) -> np.ndarray:
    """Normal-derivative jump across an interior edge at edge parameters t."""
    mesh = sol.mesh
    e = mesh.edges[eid]
    phys = mesh.edge_points(eid, t)
    grads = []
    for k in e.elems:
        ref = geometry(mesh, k).invert(phys)
        grads.append(evaluate(sol, k, "gradient", ref))
    return (grads[1] - grads[0]) @ e.normal


def compute_indicators(sol: DiscreteSolution, f: Callable,
                       params: EstimatorParams, quad_boost: int = 0) -> EstimatorReport:
    """Weighted-residual indicators.

    The interior residual f_{p_K} + Lap(u_N) is a polynomial on the reference
    square, so its weighted norm is integrated exactly; likewise the edge jump.
    Each interior edge contributes a quarter of its squared indicator to both
    neighbors; boundary edges contribute nothing.  ``quad_boost`` adds points
    to the already-exact rules (indicator values must not move).
    """
    mesh, degrees = sol.mesh, np.asarray(sol.degrees, dtype=int)
    if len(degrees) != mesh.n_elements:
        raise ParameterError("solution and mesh disagree on the element count")
    beta = params.beta
    ne = mesh.n_elements

    eta_B = np.zeros(ne)
    osc_K = np.zeros(ne)
    for k in range(ne):
        pk = int(degrees[k])
        fp = project_load(f, mesh, k, pk, beta)
        rule = cached_rule(pk + 2 + quad_boost, beta, beta)
        X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        resid = fp.evaluate_grid(rule.nodes, rule.nodes) + evaluate(
            sol, k, "laplacian", pts
        ).reshape(rule.nodes.size, rule.nodes.size)
        nrm2 = float(np.einsum("a,b,ab->", rule.weights, rule.weights, resid**2))
        eta_B[k] = np.sqrt(nrm2) / pk
        osc_K[k] = oscillation_norm(f, mesh, k, pk, beta, params.load_projection_boost) / pk

    eta_edge = np.zeros(mesh.n_edges)
    p_edge = np.zeros(mesh.n_edges, dtype=int)
    for eid, e in enumerate(mesh.edges):
        p_edge[eid] = min(int(degrees[k]) for k in e.elems)
        if e.boundary:
            continue
        n1d = max(int(degrees[k]) for k in e.elems) + 2 + quad_boost
        rule = cached_rule(n1d, beta, beta)
        jump = _edge_jump_values(sol, eid, rule.nodes)
        eta_edge[eid] = np.sqrt(float(np.dot(rule.weights, jump**2)) / p_edge[eid])

    eta_E = np.zeros(ne)
    for eid, e in enumerate(mesh.edges):
        if e.boundary:
            continue
        for k in e.elems:
            eta_E[k] += 0.25 * eta_edge[eid] ** 2
    eta_E = np.sqrt(eta_E)

    eta = float(np.sqrt(np.sum(eta_B**2 + eta_E**2)))
    osc = float(np.sqrt(np.sum(osc_K**2)))
    return EstimatorReport(
        degrees=degrees.copy(),
        p_edge=p_edge,
        eta_B=eta_B,
        eta_E=eta_E,
        eta_edge=eta_edge,
        osc_K=osc_K,
        eta=eta,
        osc=osc,
    )


@dataclass(frozen=True)
class SurrogateError:
    """Computable stand-ins for the dual error norm: the tilde-weighted broken
    norm bounds it from above; the plain energy seminorm is kept for reference."""

    tilde: float
    energy: float
    per_element: np.ndarray = field(default=None, repr=False)


def error_surrogate(sol: DiscreteSolution, u: Callable, grad_u: Callable,
                    params: EstimatorParams, quad_points: int = 0) -> SurrogateError:
    """Tilde-weighted broken H1 norm of u - u_N (plus the unweighted energy
    seminorm), by per-element quadrature with matched weight exponents."""
    mesh, degrees = sol.mesh, sol.degrees
    beta = params.beta
    per_elem = np.zeros(mesh.n_elements)
    for k in range(mesh.n_elements):
        pk = int(degrees[k])
        q = quad_points if quad_points else pk + 12
        amap = geometry(mesh, k)
        fld = pullback_field(u, grad_u, amap)
        total = 0.0
        for (ax, ay, which) in ((beta, beta, "val"), (beta - 1.0, beta, "gx"), (beta, beta - 1.0, "gy")):
            rx = cached_rule(q, ax, ax)
            ry = cached_rule(q, ay, ay)
            X, Y = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
            pts = np.column_stack([X.ravel(), Y.ravel()])
            if which == "val":
                diff = fld.value(X, Y) - evaluate(sol, k, "value", pts).reshape(X.shape)
            else:
                gxu, gyu = fld.grad(X, Y)
                gref = amap.pull_gradient(evaluate(sol, k, "gradient", pts))
                if which == "gx":
                    diff = gxu - gref[:, 0].reshape(X.shape)
                else:
                    diff = gyu - gref[:, 1].reshape(X.shape)
            total += float(np.einsum("a,b,ab->", rx.weights, ry.weights, diff**2))
        per_elem[k] = np.sqrt(total)
    tilde = float(np.sqrt(np.sum(per_elem**2)))
    return SurrogateError(tilde=tilde, energy=energy_error(sol, grad_u), per_element=per_elem)


def effectivity(eta: float, error: float, zero_tol: float = 1e-12) -> float:
    """Estimator-to-error ratio; NaN marks the degenerate both-zero case."""
    if error > zero_tol:
        return float(eta / error)
    if eta <= zero_tol:
        return float("nan")
    raise ParameterError(
        f"estimator {eta:.3e} is nonzero while the error is below {zero_tol:.1e}"
    )


# ---------------------------------------------------------------------------
# dual-norm lower bound from a finite family of test functions


def _discrete_h1mb_norm_sq(v: DiscreteSolution, beta: float) -> float:
    """Broken plain H^{1,-beta} norm (squared) of a discrete function, exact."""
    total = 0.0
    for k in range(v.mesh.n_elements):
        pk = int(v.degrees[k])
        q = pk + 2
        amap = geometry(v.mesh, k)
        for (ax, ay, which) in ((-beta, -beta, "val"), (1.0 - beta, -beta, "gx"), (-beta, 1.0 - beta, "gy")):
            rx = cached_rule(q, ax, ax)
            ry = cached_rule(q, ay, ay)
            X, Y = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
            pts = np.column_stack([X.ravel(), Y.ravel()])
            if which == "val":
                vals = evaluate(v, k, "value", pts)
            else:
                gref = amap.pull_gradient(evaluate(v, k, "gradient", pts))
                vals = gref[:, 0] if which == "gx" else gref[:, 1]
            total += float(np.einsum("a,b,ab->", rx.weights, ry.weights,
                                     vals.reshape(X.shape) ** 2))
    return total


def _residual_functional_discrete(sol: DiscreteSolution, f: Callable,
                                  v: DiscreteSolution, boost: int = 8) -> float:
    """a(e, v) = L(v) - a(u_N, v) for a discrete test function v."""
    total = 0.0
    for k in range(v.mesh.n_elements):
        pk = max(int(v.degrees[k]), int(sol.degrees[k]))
        q = pk + boost
        rule = cached_rule(q, 0.0, 0.0)
        amap = geometry(v.mesh, k)
        X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        phys = amap.apply(pts)
        w2 = np.outer(rule.weights, rule.weights).ravel()
        det = abs(amap.det)
        fv = np.asarray(f(phys[:, 0], phys[:, 1]), dtype=float) * evaluate(v, k, "value", pts)
        gn = evaluate(sol, k, "gradient", pts)
        gv = evaluate(v, k, "gradient", pts)
        total += det * float(np.dot(w2, fv - np.einsum("ij,ij->i", gn, gv)))
    return total


def _residual_functional_lift(sol: DiscreteSolution, f: Callable, jl: JumpLift,
                              quad_points: int = 30) -> float:
    """a(e, v) = L(v) - a(u_N, v) for a jump-lift test function.

    Integration by parts on each patch element turns a(u_N, v) into interior
    Laplacian terms plus the edge-jump term, all with quadrature whose weight
    absorbs the lift's algebraic edge factor.
    """
    mesh = jl.mesh
    b = jl.beta
    total = 0.0
    for k in jl.elements():
        side, sgn = jl.sides[k]
        tau_ax, g_ax, g_sign = _LIFT_LAYOUT[side]
        ploc = jl.coeffs if sgn > 0 else flip_1d(jl.coeffs)
        rt = cached_rule(quad_points, b, b)
        rn = cached_rule(quad_points, 0.0, 0.0)
        # tensor grid with tau on its own axis
        if tau_ax == 0:
            X, Y = np.meshgrid(rt.nodes, rn.nodes, indexing="ij")
            wts = np.outer(rt.weights, rn.weights)
            tau, nu = X, Y
        else:
            X, Y = np.meshgrid(rn.nodes, rt.nodes, indexing="ij")
            wts = np.outer(rn.weights, rt.weights)
            tau, nu = Y, X
        bare = edge_series(ploc, b, tau.ravel()) * edge_series(jl.g, -b, g_sign * nu.ravel())
        amap = geometry(mesh, k)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        phys = amap.apply(pts)
        det = abs(amap.det)
        fv = np.asarray(f(phys[:, 0], phys[:, 1]), dtype=float)
        lap = evaluate(sol, k, "laplacian", pts)
        total += det * float(np.dot(wts.ravel(), (fv + lap) * bare))

    # edge term: + integral over the edge of R_l * v ds
    e = mesh.edges[jl.edge_id]
    a_vert, b_vert = e.verts
    length = float(np.linalg.norm(mesh.vertices[b_vert] - mesh.vertices[a_vert]))
    rt = cached_rule(jl.degree + max(int(d) for d in sol.degrees[list(e.elems)]) + 2, b, b)
    jumps = _edge_jump_values(sol, jl.edge_id, rt.nodes)
    pv = edge_series(jl.coeffs, b, rt.nodes)
    total += 0.5 * length * float(np.dot(rt.weights, jumps * pv))
    return total


def _cross_inner_h1mb(vd: DiscreteSolution, jl: JumpLift) -> float:
    """Exact H^{1,-beta} inner product between a discrete function and a lift."""
    b = jl.beta
    total = 0.0
    for k in jl.elements():
        side, sgn = jl.sides[k]
        tau_ax, g_ax, g_sign = _LIFT_LAYOUT[side]
        ploc = jl.coeffs if sgn > 0 else flip_1d(jl.coeffs)
        pk = int(vd.degrees[k])
        q = pk + jl.degree + len(jl.g) + 2
        amap = geometry(vd.mesh, k)

        def grids(exp_tau, exp_nu):
            rtau = cached_rule(q, exp_tau, exp_tau)
            rnu = cached_rule(q, exp_nu, exp_nu)
            if tau_ax == 0:
                X, Y = np.meshgrid(rtau.nodes, rnu.nodes, indexing="ij")
                w = np.outer(rtau.weights, rnu.weights)
            else:
                X, Y = np.meshgrid(rnu.nodes, rtau.nodes, indexing="ij")
                w = np.outer(rnu.weights, rtau.weights)
            return X, Y, w

        # k = 0 term: weight exponents (-b, -b); lift contributes (1-tau^2)^b
        X, Y, w = grids(0.0, -b)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        tau = pts[:, tau_ax]
        nu = pts[:, g_ax]
        lift_bare = edge_series(ploc, b, tau) * edge_series(jl.g, -b, g_sign * nu)
        total += float(np.dot(w.ravel(), evaluate(vd, k, "value", pts) * lift_bare))

        def gref(pts):
            return amap.pull_gradient(evaluate(vd, k, "gradient", pts))

        # d/dtau term: weight (1-tau^2)^{1-b} (1-nu^2)^{-b};
        # lift's tau-derivative carries (1-tau^2)^{b-1}: exponents cancel.
        X, Y, w = grids(0.0, -b)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        tau = pts[:, tau_ax]
        nu = pts[:, g_ax]
        bracket = (
            edge_series(ploc, b, tau, deriv=1) * (1.0 - tau**2)
            - 2.0 * b * tau * edge_series(ploc, b, tau)
        ) * edge_series(jl.g, -b, g_sign * nu)
        total += float(np.dot(w.ravel(), gref(pts)[:, tau_ax] * bracket))

        # d/dnu term: weight (1-nu^2)^{1-b} (1-tau^2)^{-b}; lift factor (1-tau^2)^b cancels.
        X, Y, w = grids(0.0, 1.0 - b)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        tau = pts[:, tau_ax]
        nu = pts[:, g_ax]
        dnu = edge_series(ploc, b, tau) * g_sign * edge_series(jl.g, -b, g_sign * nu, deriv=1)
        total += float(np.dot(w.ravel(), gref(pts)[:, g_ax] * dnu))
    return total


def dual_norm_lower_bound(sol: DiscreteSolution, f: Callable, params: EstimatorParams,
                          n_funcs: int = 20, seed: int = 0) -> float:
    """Lower bound for the dual error norm: the best ratio a(e, v)/||v|| over a
    finite family of discrete-plus-lift test functions v.

    Each candidate is a random function from the degree-elevated space plus a
    random jump lift on one interior edge; the exact supremum is intractable,
    a maximum over a family is always below it.
    """
    mesh, degrees = sol.mesh, np.asarray(sol.degrees, dtype=int)
    beta = params.beta
    rng = np.random.default_rng(seed)
    rich_map = DofMap(mesh, degrees + 2)
    interior = [eid for eid, e in enumerate(mesh.edges) if e.interior]
    best = 0.0
    for _ in range(n_funcs):
        coeffs = rng.standard_normal(rich_map.n_free)
        vd = DiscreteSolution(coeffs, mesh, degrees + 2, rich_map)
        num = _residual_functional_discrete(sol, f, vd)
        nrm2 = _discrete_h1mb_norm_sq(vd, beta)
        if interior:
            eid = int(rng.choice(interior))
            p_l = min(int(degrees[k]) for k in mesh.edges[eid].elems)
            pcf = rng.standard_normal(p_l + 1)
            jl = jump_lift(pcf, eid, mesh, beta)
            num += _residual_functional_lift(sol, f, jl)
            nrm2 += jl.norm_h1() ** 2 + 2.0 * _cross_inner_h1mb(vd, jl)
        ratio = abs(num) / np.sqrt(nrm2)
        best = max(best, float(ratio))
    return best
