"""Conforming parallelogram meshes, affine reference maps, patches and
per-element polynomial degree maps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConformityError, GeometryError, OrientationError, ParameterError

# local side s of the reference square, in edge-coordinate direction:
# side 0 (bottom, y=-1): vertices 0 -> 1; side 1 (right, x=+1): 1 -> 2;
# side 2 (top, y=+1): 3 -> 2; side 3 (left, x=-1): 0 -> 3.
SIDE_VERTS = ((0, 1), (1, 2), (3, 2), (0, 3))


@dataclass(frozen=True)
class AffineMap:
    """x = offset + matrix @ x_ref, mapping Q = (-1,1)^2 onto an element."""

    matrix: np.ndarray
    offset: np.ndarray

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def inverse_matrix(self) -> np.ndarray:
        m = self.matrix
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / self.det

    @property
    def laplacian_coeffs(self) -> np.ndarray:
        """A = B^{-1} B^{-T}: Laplacian of u pulled back is sum A_ij d2u/dxi dxj."""
        binv = self.inverse_matrix
        return binv @ binv.T

    def apply(self, ref_pts: np.ndarray) -> np.ndarray:
        ref_pts = np.asarray(ref_pts, dtype=float)
        return ref_pts @ self.matrix.T + self.offset

    def invert(self, phys_pts: np.ndarray) -> np.ndarray:
        phys_pts = np.asarray(phys_pts, dtype=float)
        return (phys_pts - self.offset) @ self.inverse_matrix.T

    def push_gradient(self, ref_grad: np.ndarray) -> np.ndarray:
        """Physical gradient from reference gradient (rows = points)."""
        return np.asarray(ref_grad, dtype=float) @ self.inverse_matrix

    def pull_gradient(self, phys_grad: np.ndarray) -> np.ndarray:
        """Reference gradient of the pull-back from the physical gradient."""
        return np.asarray(phys_grad, dtype=float) @ self.matrix


@dataclass(frozen=True)
class Edge:
    verts: tuple  # (a, b) with a < b; edge coordinate runs from a to b
    elems: tuple  # (k_in,) for boundary, (k_in, k_out) for interior
    normal: np.ndarray  # unit normal, from k_in towards k_out (outward if boundary)
    boundary: bool

    @property
    def interior(self) -> bool:
        return not self.boundary


@dataclass
class ParallelogramMesh:
    vertices: np.ndarray  # (nv, 2)
    elements: np.ndarray  # (ne, 4) CCW vertex indices
    edges: list = field(default_factory=list)
    elem_edges: Optional[np.ndarray] = None  # (ne, 4) global edge id per local side
    elem_edge_sign: Optional[np.ndarray] = None  # +1 if local direction matches a->b
    vertex_on_boundary: Optional[np.ndarray] = None
    vertex_elems: Optional[list] = None

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def interior_edges(self):
        return [i for i, e in enumerate(self.edges) if e.interior]

    def element_centroid(self, k: int) -> np.ndarray:
        return self.vertices[self.elements[k]].mean(axis=0)

    def edge_midpoint(self, eid: int) -> np.ndarray:
        a, b = self.edges[eid].verts
        return 0.5 * (self.vertices[a] + self.vertices[b])

    def edge_points(self, eid: int, t) -> np.ndarray:
        """Physical points on an edge for parameter t in [-1, 1] (from a to b)."""
        a, b = self.edges[eid].verts
        t = np.atleast_1d(np.asarray(t, dtype=float))
        mid = self.edge_midpoint(eid)
        half = 0.5 * (self.vertices[b] - self.vertices[a])
        return mid + np.outer(t, half)


def geometry(mesh: ParallelogramMesh, k: int) -> AffineMap:
    """Affine map of element k, taking (-1,-1) to its vertex 0."""
    if not 0 <= k < mesh.n_elements:
        raise ParameterError(f"element index {k} out of range")
    v = mesh.vertices[mesh.elements[k]]
    b = 0.5 * np.column_stack([v[1] - v[0], v[3] - v[0]])
    offset = 0.25 * v.sum(axis=0)
    diam = max(np.linalg.norm(v[2] - v[0]), np.linalg.norm(v[3] - v[1]))
    det = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    if abs(det) < 1e-12 * diam**2:
        raise GeometryError(f"element {k} is degenerate (|det| = {abs(det):.3e})")
    return AffineMap(matrix=b, offset=offset)


def load_and_validate(source) -> ParallelogramMesh:
    """Build a validated mesh from a JSON file path, file-like object or dict.

    The document carries ``vertices: [[x, y], ...]`` and
    ``elements: [[i0, i1, i2, i3], ...]`` with 0-based CCW vertex indices;
    edge adjacency and boundary flags are derived here, never trusted.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            doc = json.load(fh)
    elif hasattr(source, "read"):
        doc = json.load(source)
    elif isinstance(source, dict):
        doc = source
    else:
        raise ParameterError(f"unsupported mesh source {type(source)!r}")

    try:
        vertices = np.asarray(doc["vertices"], dtype=float)
        elements = np.asarray(doc["elements"], dtype=int)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed mesh document: {exc}") from exc
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise ParameterError(f"vertices must be (n, 2), got {vertices.shape}")
    if elements.ndim != 2 or elements.shape[1] != 4:
        raise ParameterError(f"elements must be (n, 4), got {elements.shape}")
    if elements.min(initial=0) < 0 or elements.max(initial=-1) >= len(vertices):
        raise ParameterError("element vertex index out of range")

    mesh = ParallelogramMesh(vertices=vertices, elements=elements)
    _validate_elements(mesh)
    _build_edges(mesh)
    _check_hanging_nodes(mesh)
    return mesh


def _validate_elements(mesh: ParallelogramMesh) -> None:
    for k in range(mesh.n_elements):
        v = mesh.vertices[mesh.elements[k]]
        diam = max(np.linalg.norm(v[2] - v[0]), np.linalg.norm(v[3] - v[1]))
        if diam == 0.0:
            raise GeometryError(f"element {k} has zero diameter")
        gap = np.linalg.norm(v[0] + v[2] - v[1] - v[3])
        if gap > 1e-12 * diam:
            raise GeometryError(
                f"element {k} is not a parallelogram (closure gap {gap:.3e})"
            )
        d1, d3 = v[1] - v[0], v[3] - v[0]
        cross = d1[0] * d3[1] - d1[1] * d3[0]
        if cross <= 0.0:
            raise OrientationError(f"element {k} vertices are not counter-clockwise")
        geometry(mesh, k)  # degeneracy check


def _build_edges(mesh: ParallelogramMesh) -> None:
    pair_elems: dict = {}
    for k in range(mesh.n_elements):
        conn = mesh.elements[k]
        for s, (la, lb) in enumerate(SIDE_VERTS):
            key = tuple(sorted((int(conn[la]), int(conn[lb]))))
            pair_elems.setdefault(key, []).append(k)
    for key, ks in pair_elems.items():
        if len(ks) > 2:
            raise ConformityError(f"edge {key} is shared by more than two elements: {ks}")

    edges = []
    edge_index = {}
    for key in sorted(pair_elems):
        ks = sorted(pair_elems[key])
        a, b = key
        half = mesh.vertices[b] - mesh.vertices[a]
        n = np.array([half[1], -half[0]])
        n /= np.linalg.norm(n)
        mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        if len(ks) == 2:
            direction = mesh.element_centroid(ks[1]) - mesh.element_centroid(ks[0])
            if np.dot(n, direction) < 0.0:
                n = -n
            edge = Edge(verts=key, elems=(ks[0], ks[1]), normal=n, boundary=False)
        else:
            if np.dot(n, mesh.element_centroid(ks[0]) - mid) > 0.0:
                n = -n
            edge = Edge(verts=key, elems=(ks[0],), normal=n, boundary=True)
        edge_index[key] = len(edges)
        edges.append(edge)

    ne = mesh.n_elements
    elem_edges = np.zeros((ne, 4), dtype=int)
    elem_edge_sign = np.zeros((ne, 4), dtype=int)
    for k in range(ne):
        conn = mesh.elements[k]
        for s, (la, lb) in enumerate(SIDE_VERTS):
            ga, gb = int(conn[la]), int(conn[lb])
            eid = edge_index[tuple(sorted((ga, gb)))]
            elem_edges[k, s] = eid
            elem_edge_sign[k, s] = 1 if edges[eid].verts[0] == ga else -1

    vertex_on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
    for e in edges:
        if e.boundary:
            vertex_on_boundary[list(e.verts)] = True

    vertex_elems = [[] for _ in range(mesh.n_vertices)]
    for k in range(ne):
        for v in mesh.elements[k]:
            vertex_elems[int(v)].append(k)

    mesh.edges = edges
    mesh.elem_edges = elem_edges
    mesh.elem_edge_sign = elem_edge_sign
    mesh.vertex_on_boundary = vertex_on_boundary
    mesh.vertex_elems = [sorted(set(ks)) for ks in vertex_elems]


def _check_hanging_nodes(mesh: ParallelogramMesh) -> None:
    for eid, e in enumerate(mesh.edges):
        a, b = e.verts
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        d = pb - pa
        length2 = float(d @ d)
        for v in range(mesh.n_vertices):
            if v == a or v == b:
                continue
            t = float((mesh.vertices[v] - pa) @ d) / length2
            if 1e-10 < t < 1.0 - 1e-10:
                off = mesh.vertices[v] - (pa + t * d)
                if np.linalg.norm(off) < 1e-10 * np.sqrt(length2):
                    raise ConformityError(
                        f"vertex {v} hangs on edge {e.verts} (no hanging nodes allowed)"
                    )


def rect_mesh_dict(nx: int, ny: int, x0: float = 0.0, y0: float = 0.0,
                   width: float = 1.0, height: float = 1.0) -> dict:
    """JSON-ready mesh document for an nx-by-ny grid of congruent rectangles."""
    xs = x0 + width * np.arange(nx + 1) / nx
    ys = y0 + height * np.arange(ny + 1) / ny
    vertices = [[float(x), float(y)] for y in ys for x in xs]
    elements = []
    for j in range(ny):
        for i in range(nx):
            v0 = j * (nx + 1) + i
            elements.append([v0, v0 + 1, v0 + nx + 2, v0 + nx + 1])
    return {"vertices": vertices, "elements": elements}


def l_shaped_mesh_dict(n: int = 2) -> dict:
    """L-shaped domain (-1,1)^2 minus the quadrant x>0, y<0, each of the three
    unit squares split n-by-n; the reentrant corner sits at the origin."""
    squares = [(-1.0, -1.0), (-1.0, 0.0), (0.0, 0.0)]
    key_of = {}
    vertices = []

    def vid(x, y):
        key = (round(x, 12), round(y, 12))
        if key not in key_of:
            key_of[key] = len(vertices)
            vertices.append([float(x), float(y)])
        return key_of[key]

    elements = []
    h = 1.0 / n
    for sx, sy in squares:
        for j in range(n):
            for i in range(n):
                x, y = sx + i * h, sy + j * h
                elements.append([
                    vid(x, y), vid(x + h, y), vid(x + h, y + h), vid(x, y + h),
                ])
    return {"vertices": vertices, "elements": elements}


def uniform_degrees(mesh: ParallelogramMesh, p: int) -> np.ndarray:
    if p < 1:
        raise ParameterError(f"degree must be >= 1, got {p}")
    return np.full(mesh.n_elements, p, dtype=int)


def _vertex_neighbors(mesh: ParallelogramMesh) -> list:
    nbrs = [set() for _ in range(mesh.n_elements)]
    for ks in mesh.vertex_elems:
        for k in ks:
            nbrs[k].update(ks)
    return [sorted(s) for s in nbrs]


def smooth_degrees(mesh: ParallelogramMesh, degrees: np.ndarray) -> np.ndarray:
    """Raise degrees until vertex-neighboring elements differ by at most 1."""
    p = np.asarray(degrees, dtype=int).copy()
    nbrs = _vertex_neighbors(mesh)
    changed = True
    while changed:
        changed = False
        for k in range(mesh.n_elements):
            floor = max(p[j] for j in nbrs[k]) - 1
            if p[k] < floor:
                p[k] = floor
                changed = True
    return p


def comparability_violations(mesh: ParallelogramMesh, degrees: np.ndarray,
                             factor: float = 2.0) -> list:
    """Pairs of vertex-neighboring elements whose degrees are not comparable."""
    p = np.asarray(degrees, dtype=int)
    bad = []
    nbrs = _vertex_neighbors(mesh)
    for k in range(mesh.n_elements):
        for j in nbrs[k]:
            if j > k and (p[k] > factor * p[j] or p[j] > factor * p[k]):
                bad.append((k, j))
    return bad


@dataclass(frozen=True)
class PatchTables:
    omega_V: list  # per vertex: element ids touching it
    omega_K: list  # per element: elements sharing at least a vertex (incl. itself)
    omega_e: list  # per edge: elements touching either endpoint
    p_V: np.ndarray  # min degree over omega_V membership by containment
    p_e: np.ndarray  # min degree over the elements having the edge as a side
    violations: list


def patches_and_degrees(mesh: ParallelogramMesh, degrees: np.ndarray) -> PatchTables:
    """Vertex/element/edge patches and the minimum-degree tables."""
    p = np.asarray(degrees, dtype=int)
    if p.shape != (mesh.n_elements,):
        raise ParameterError(
            f"degree map must have one entry per element, got shape {p.shape}"
        )
    if np.any(p < 1):
        raise ParameterError("all degrees must be >= 1")
    omega_V = [list(ks) for ks in mesh.vertex_elems]
    omega_K = _vertex_neighbors(mesh)
    omega_e = []
    p_e = np.zeros(mesh.n_edges, dtype=int)
    for e in mesh.edges:
        a, b = e.verts
        omega_e.append(sorted(set(mesh.vertex_elems[a]) | set(mesh.vertex_elems[b])))
        p_e[len(omega_e) - 1] = min(p[k] for k in e.elems)
    p_V = np.array([min(p[k] for k in ks) if ks else 0 for ks in mesh.vertex_elems])
    return PatchTables(
        omega_V=omega_V,
        omega_K=omega_K,
        omega_e=omega_e,
        p_V=p_V,
        p_e=p_e,
        violations=comparability_violations(mesh, p),
    )
