"""Shared fixtures and measurement helpers for the test suite."""

import numpy as np
import pytest

from jacobifem.benchmarks import get_benchmark
from jacobifem.mesh import geometry, load_and_validate, rect_mesh_dict
from jacobifem.spaces import WeightSpec, cached_rule, pullback_field, weighted_norm


@pytest.fixture(scope="session")
def square_q():
    """Single-element mesh of the reference square itself."""
    return load_and_validate({
        "vertices": [[-1, -1], [1, -1], [1, 1], [-1, 1]],
        "elements": [[0, 1, 2, 3]],
    })


@pytest.fixture(scope="session")
def mesh2x2():
    """Unit square split into 2x2 congruent squares."""
    return load_and_validate(rect_mesh_dict(2, 2))


@pytest.fixture(scope="session")
def sine():
    return get_benchmark("smooth-sine")


@pytest.fixture(scope="session")
def bubble():
    return get_benchmark("bubble-exact")


@pytest.fixture(scope="session")
def corner():
    return get_benchmark("corner-cutoff")


def element_error_h0(mesh, k, u, parts, beta, quad_points):
    """Weighted L2 norm on element k of u minus a per-element expansion."""
    amap = geometry(mesh, k)
    rule = cached_rule(quad_points, beta, beta)
    X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    pts = amap.apply(np.column_stack([X.ravel(), Y.ravel()]))
    uv = np.asarray(u(pts[:, 0], pts[:, 1]), dtype=float).reshape(X.shape)
    diff = uv - parts[k].evaluate_grid(rule.nodes, rule.nodes)
    return float(np.sqrt(np.einsum("a,b,ab->", rule.weights, rule.weights, diff**2)))


def edge_error_h0(mesh, eid, u, parts, beta, quad_points):
    """Weighted L2 norm on an edge of u minus an expansion's trace."""
    e = mesh.edges[eid]
    k = e.elems[0]
    rule = cached_rule(quad_points, beta, beta)
    phys = mesh.edge_points(eid, rule.nodes)
    uv = np.asarray(u(phys[:, 0], phys[:, 1]), dtype=float)
    ref = geometry(mesh, k).invert(phys)
    iv = parts[k].evaluate(ref[:, 0], ref[:, 1])
    return float(np.sqrt(np.dot(rule.weights, (uv - iv) ** 2)))


def patch_seminorm(mesh, elems, u, grad_u, beta, quad_points):
    """Broken weighted H1 seminorm of u over a set of elements."""
    total = 0.0
    for k in elems:
        fld = pullback_field(u, grad_u, geometry(mesh, k))
        total += weighted_norm(fld, WeightSpec(1, beta), quad_points=quad_points,
                               seminorm=True) ** 2
    return float(np.sqrt(total))
