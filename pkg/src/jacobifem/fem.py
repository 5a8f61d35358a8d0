"""Hierarchical tensor-product basis, degree-aware DOF map, assembly of the
Poisson stiffness/load, linear solve, and per-element evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ParameterError, SolverError
from .jacobi import jacobi_table
from .mesh import SIDE_VERTS, AffineMap, ParallelogramMesh, geometry
from .spaces import cached_rule


def shape1d(p: int, x, nderiv: int = 0) -> np.ndarray:
    """1D hierarchical shapes on (-1,1): hats (1-x)/2, (1+x)/2 and integrated
    Legendre bubbles b_k = (P_k - P_{k-2}) / sqrt(2(2k-1)) for k = 2..p.

    Returns (p+1, len(x), nderiv+1); bubbles vanish at the endpoints exactly.
    """
    if p < 1:
        raise ParameterError(f"degree must be >= 1, got {p}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    leg = jacobi_table(p, 0.0, 0.0, x, nderiv)
    out = np.zeros((p + 1, x.size, nderiv + 1))
    out[0, :, 0] = 0.5 * (1.0 - x)
    out[1, :, 0] = 0.5 * (1.0 + x)
    if nderiv >= 1:
        out[0, :, 1] = -0.5
        out[1, :, 1] = 0.5
    for k in range(2, p + 1):
        out[k] = (leg[k] - leg[k - 2]) / np.sqrt(2.0 * (2.0 * k - 1.0))
    return out


@dataclass(frozen=True)
class LocalShape:
    gdof: int  # global free dof index
    rx: int  # row into shape1d for the x factor
    ry: int  # row into shape1d for the y factor
    sign: float


# tensor factor rows of the four vertex hats, in local vertex order
_VERTEX_ROWS = ((0, 0), (1, 0), (1, 1), (0, 1))
# (edge factor, frozen factor row, edge runs in x?) per local side
_SIDE_LAYOUT = (
    ("x", 0),  # bottom: b_k(x) * N0(y)
    ("y", 1),  # right:  N1(x) * b_k(y)
    ("x", 1),  # top:    b_k(x) * N1(y)
    ("y", 0),  # left:   N0(x) * b_k(y)
)


class DofMap:
    """Global numbering of vertex, edge (minimum rule) and interior DOFs with
    homogeneous Dirichlet boundary DOFs removed."""

    def __init__(self, mesh: ParallelogramMesh, degrees: np.ndarray):
        degrees = np.asarray(degrees, dtype=int)
        if degrees.shape != (mesh.n_elements,):
            raise ParameterError("degree map must have one entry per element")
        if np.any(degrees < 1):
            raise ParameterError("all degrees must be >= 1")
        self.mesh = mesh
        self.degrees = degrees

        p_edge = np.zeros(mesh.n_edges, dtype=int)
        for eid, e in enumerate(mesh.edges):
            p_edge[eid] = min(int(degrees[k]) for k in e.elems)
        self.edge_order = p_edge

        nxt = 0
        vertex_dof = np.full(mesh.n_vertices, -1, dtype=int)
        for v in range(mesh.n_vertices):
            if not mesh.vertex_on_boundary[v]:
                vertex_dof[v] = nxt
                nxt += 1
        edge_dofs = []
        for eid, e in enumerate(mesh.edges):
            if e.boundary:
                edge_dofs.append(None)
            else:
                n = max(p_edge[eid] - 1, 0)
                edge_dofs.append(np.arange(nxt, nxt + n))
                nxt += n
        self.vertex_dof = vertex_dof
        self.edge_dofs = edge_dofs

        elem_tables = []
        for k in range(mesh.n_elements):
            table = []
            conn = mesh.elements[k]
            for l in range(4):
                g = vertex_dof[conn[l]]
                if g >= 0:
                    rx, ry = _VERTEX_ROWS[l]
                    table.append(LocalShape(g, rx, ry, 1.0))
            for s in range(4):
                eid = mesh.elem_edges[k, s]
                dofs = edge_dofs[eid]
                if dofs is None:
                    continue
                axis, frozen_row = _SIDE_LAYOUT[s]
                flip = mesh.elem_edge_sign[k, s] < 0
                for i, g in enumerate(dofs):
                    kk = i + 2
                    sign = (-1.0) ** kk if flip else 1.0
                    if axis == "x":
                        table.append(LocalShape(int(g), kk, frozen_row, sign))
                    else:
                        table.append(LocalShape(int(g), frozen_row, kk, sign))
            pk = int(degrees[k])
            for kx in range(2, pk + 1):
                for ky in range(2, pk + 1):
                    table.append(LocalShape(nxt, kx, ky, 1.0))
                    nxt += 1
            elem_tables.append(table)
        self.elem_tables = elem_tables
        self.n_free = nxt


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    mesh: ParallelogramMesh
    degrees: np.ndarray


@dataclass
class DiscreteSolution:
    coeffs: np.ndarray
    mesh: ParallelogramMesh
    degrees: np.ndarray
    dofmap: DofMap

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_free


@lru_cache(maxsize=None)
def _gl_rule(n: int):
    return cached_rule(n, 0.0, 0.0)


def _element_tensor_tables(table, p, xq, yq, nderiv):
    tx = shape1d(p, xq, nderiv)
    ty = shape1d(p, yq, nderiv)
    return tx, ty


def assemble(mesh: ParallelogramMesh, degrees: np.ndarray, f: Callable,
             quad_order_boost: int = 3) -> LinearSystem:
    """Stiffness matrix and load vector on the free DOFs.

    Element integrals use Gauss-Legendre with p_K + 1 + boost points per
    direction, which integrates the stiffness integrand exactly; the load is
    approximated at the same order.
    """
    dofmap = DofMap(mesh, degrees)
    rows, cols, vals = [], [], []
    rhs = np.zeros(dofmap.n_free)
    for k in range(mesh.n_elements):
        table = dofmap.elem_tables[k]
        if not table:
            continue
        pk = int(degrees[k])
        amap = geometry(mesh, k)
        nq = pk + 1 + quad_order_boost
        rule = _gl_rule(nq)
        xq = rule.nodes
        w2 = np.outer(rule.weights, rule.weights)
        tx, ty = _element_tensor_tables(table, pk, xq, xq, 1)

        nloc = len(table)
        V = np.empty((nloc, nq, nq))
        Gx = np.empty((nloc, nq, nq))
        Gy = np.empty((nloc, nq, nq))
        for i, shp in enumerate(table):
            V[i] = shp.sign * np.outer(tx[shp.rx, :, 0], ty[shp.ry, :, 0])
            Gx[i] = shp.sign * np.outer(tx[shp.rx, :, 1], ty[shp.ry, :, 0])
            Gy[i] = shp.sign * np.outer(tx[shp.rx, :, 0], ty[shp.ry, :, 1])

        A = amap.laplacian_coeffs
        det = abs(amap.det)
        Wx = w2 * det
        k_loc = (
            A[0, 0] * np.einsum("iab,jab,ab->ij", Gx, Gx, Wx)
            + A[0, 1] * (np.einsum("iab,jab,ab->ij", Gx, Gy, Wx)
                         + np.einsum("iab,jab,ab->ij", Gy, Gx, Wx))
            + A[1, 1] * np.einsum("iab,jab,ab->ij", Gy, Gy, Wx)
        )
        X, Y = np.meshgrid(xq, xq, indexing="ij")
        phys = amap.apply(np.column_stack([X.ravel(), Y.ravel()]))
        fvals = np.asarray(f(phys[:, 0], phys[:, 1]), dtype=float).reshape(nq, nq)
        b_loc = np.einsum("iab,ab->i", V, fvals * Wx)

        gdofs = [shp.gdof for shp in table]
        for i, gi in enumerate(gdofs):
            rhs[gi] += b_loc[i]
            for j, gj in enumerate(gdofs):
                rows.append(gi)
                cols.append(gj)
                vals.append(k_loc[i, j])
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(dofmap.n_free, dofmap.n_free)).tocsr()
    return LinearSystem(matrix=matrix, rhs=rhs, dofmap=dofmap, mesh=mesh, degrees=np.asarray(degrees, dtype=int))


def solve(system: LinearSystem, rtol: float = 1e-12) -> DiscreteSolution:
    """Direct sparse solve with an iterative-refinement step; the contract is a
    relative residual below ``rtol``."""
    n = system.dofmap.n_free
    if n == 0:
        return DiscreteSolution(np.zeros(0), system.mesh, system.degrees, system.dofmap)
    A = system.matrix
    asym = abs(A - A.T).max()
    scale = abs(A).max()
    if asym > 1e-12 * scale:
        raise SolverError(f"stiffness matrix is not symmetric (|A - A^T| = {asym:.3e})")
    if A.diagonal().min() <= 0.0:
        raise SolverError("stiffness matrix has a non-positive diagonal entry")
    lu = spla.splu(A.tocsc())
    x = lu.solve(system.rhs)
    bnorm = max(np.linalg.norm(system.rhs), 1e-300)
    for _ in range(3):
        r = system.rhs - A @ x
        if np.linalg.norm(r) / bnorm <= rtol:
            break
        x = x + lu.solve(r)
    res = np.linalg.norm(system.rhs - A @ x) / bnorm
    if res > rtol:
        raise SolverError(f"relative residual {res:.3e} above tolerance {rtol:.1e}")
    return DiscreteSolution(x, system.mesh, system.degrees, system.dofmap)


def evaluate(sol: DiscreteSolution, k: int, what: str, points: np.ndarray):
    """Evaluate the discrete solution on element k at reference-square points.

    ``what`` is 'value', 'gradient' (physical) or 'laplacian' (physical).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != 2:
        raise ParameterError(f"points must be (n, 2), got {points.shape}")
    table = sol.dofmap.elem_tables[k]
    pk = int(sol.degrees[k])
    amap = geometry(sol.mesh, k)
    nderiv = 0 if what == "value" else (1 if what == "gradient" else 2)
    tx = shape1d(pk, points[:, 0], nderiv)
    ty = shape1d(pk, points[:, 1], nderiv)
    npts = points.shape[0]

    if what == "value":
        out = np.zeros(npts)
        for shp in table:
            c = shp.sign * sol.coeffs[shp.gdof]
            out += c * tx[shp.rx, :, 0] * ty[shp.ry, :, 0]
        return out
    if what == "gradient":
        gref = np.zeros((npts, 2))
        for shp in table:
            c = shp.sign * sol.coeffs[shp.gdof]
            gref[:, 0] += c * tx[shp.rx, :, 1] * ty[shp.ry, :, 0]
            gref[:, 1] += c * tx[shp.rx, :, 0] * ty[shp.ry, :, 1]
        return amap.push_gradient(gref)
    if what == "laplacian":
        A = amap.laplacian_coeffs
        out = np.zeros(npts)
        for shp in table:
            c = shp.sign * sol.coeffs[shp.gdof]
            out += c * (
                A[0, 0] * tx[shp.rx, :, 2] * ty[shp.ry, :, 0]
                + 2.0 * A[0, 1] * tx[shp.rx, :, 1] * ty[shp.ry, :, 1]
                + A[1, 1] * tx[shp.rx, :, 0] * ty[shp.ry, :, 2]
            )
        return out
    raise ParameterError(f"unknown evaluation kind {what!r}")


def energy_error(sol: DiscreteSolution, grad_u: Callable, quad_points: int = 0) -> float:
    """Physical H1 seminorm of u - u_N for a manufactured gradient."""
    total = 0.0
    for k in range(sol.mesh.n_elements):
        pk = int(sol.degrees[k])
        nq = quad_points if quad_points else pk + 8
        rule = _gl_rule(nq)
        X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        amap = geometry(sol.mesh, k)
        phys = amap.apply(pts)
        gx, gy = grad_u(phys[:, 0], phys[:, 1])
        gn = evaluate(sol, k, "gradient", pts)
        diff = (np.asarray(gx, dtype=float) - gn[:, 0]) ** 2 + (np.asarray(gy, dtype=float) - gn[:, 1]) ** 2
        w2 = np.outer(rule.weights, rule.weights).ravel()
        total += abs(amap.det) * float(np.dot(w2, diff))
    return float(np.sqrt(total))


def galerkin_residuals(system: LinearSystem, sol: DiscreteSolution, grad_u: Callable,
                       quad_points_boost: int = 8) -> np.ndarray:
    """Per-basis-function orthogonality defect a(u - u_N, v_i), scaled by the
    energy norm of v_i; the exact-solution side is integrated independently."""
    n = system.dofmap.n_free
    g = np.zeros(n)
    for k in range(system.mesh.n_elements):
        table = system.dofmap.elem_tables[k]
        if not table:
            continue
        pk = int(system.degrees[k])
        amap = geometry(system.mesh, k)
        nq = pk + quad_points_boost
        rule = _gl_rule(nq)
        X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        phys = amap.apply(pts)
        gx, gy = grad_u(phys[:, 0], phys[:, 1])
        gphys = np.column_stack([np.asarray(gx, float), np.asarray(gy, float)])
        # reference gradient of the pull-back, for the weighted inner product
        gref_u = amap.pull_gradient(gphys)
        tx = shape1d(pk, rule.nodes, 1)
        w2 = np.outer(rule.weights, rule.weights).ravel()
        A = amap.laplacian_coeffs
        det = abs(amap.det)
        for shp in table:
            vx = shp.sign * np.outer(tx[shp.rx, :, 1], tx[shp.ry, :, 0]).ravel()
            vy = shp.sign * np.outer(tx[shp.rx, :, 0], tx[shp.ry, :, 1]).ravel()
            term = (
                A[0, 0] * gref_u[:, 0] * vx
                + A[0, 1] * (gref_u[:, 0] * vy + gref_u[:, 1] * vx)
                + A[1, 1] * gref_u[:, 1] * vy
            )
            g[shp.gdof] += det * float(np.dot(w2, term))
    defect = g - system.matrix @ sol.coeffs
    energy = np.sqrt(system.matrix.diagonal())
    return defect / np.maximum(energy, 1e-300)
