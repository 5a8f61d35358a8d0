"""Boundary-decay polynomial, vertex/edge constructions, local and global
interpolants, and the weighted jump lift."""

import numpy as np
import pytest

from conftest import element_error_h0, patch_seminorm
from jacobifem.errors import ParameterError
from jacobifem.interpolation import (
    boundary_decay_poly,
    edge_lift,
    flip_1d,
    global_interpolant,
    hat_function,
    jump_lift,
    local_interpolant,
    vertex_function,
)
from jacobifem.mesh import geometry, load_and_validate, rect_mesh_dict, uniform_degrees
from jacobifem.spaces import (
    WeightSpec,
    cached_rule,
    edge_norm_h0,
    edge_series,
    expand_1d,
    weighted_norm,
)

BETA = -0.6


class TestBoundaryDecayPoly:
    @pytest.mark.parametrize("beta", [-0.6, 0.6])
    def test_endpoint_values(self, beta):
        for p in range(1, 21):
            g = boundary_decay_poly(p, beta)
            assert edge_series(g, beta, -1.0) == pytest.approx(1.0, abs=1e-12)
            assert abs(edge_series(g, beta, 1.0)) < 1e-12

    def test_degree_one_closed_form(self):
        g = boundary_decay_poly(1, BETA)
        t = np.linspace(-1, 1, 9)
        assert np.allclose(edge_series(g, BETA, t), 0.5 * (1 - t), atol=1e-14)

    def test_degree_zero_rejected(self):
        with pytest.raises(ParameterError):
            boundary_decay_poly(0, BETA)

    @pytest.mark.parametrize("beta", [-0.6, 0.6])
    def test_norm_decay_rate(self, beta):
        scaled = [
            (p + 1) ** (1 + beta) * edge_norm_h0(boundary_decay_poly(p, beta), beta)
            for p in range(1, 41)
        ]
        anchor = scaled[3]
        assert all(s <= 3.0 * anchor for s in scaled)


class TestVertexFunction:
    def test_kronecker_pattern(self):
        for slot in range(4):
            xi = vertex_function(slot, 3, BETA)
            want = np.zeros(4)
            want[slot] = 1.0
            assert np.max(np.abs(xi.corner_values() - want)) < 1e-12

    def test_degree_one_is_bilinear_hat(self):
        xi = vertex_function(0, 1, BETA)
        rng = np.random.default_rng(1)
        x, y = rng.uniform(-1, 1, (2, 20))
        assert np.allclose(xi.evaluate(x, y), (1 - x) * (1 - y) / 4, atol=1e-13)

    def test_bad_slot(self):
        with pytest.raises(ParameterError):
            vertex_function(4, 2, BETA)

    def test_norm_decay(self):
        scaled = [
            (p + 1) ** (2 + 2 * BETA)
            * weighted_norm(vertex_function(0, p, BETA), WeightSpec(0, BETA))
            for p in range(1, 31)
        ]
        assert all(s <= 3.0 * scaled[3] for s in scaled)


class TestEdgeLift:
    def test_zero_in_zero_out(self):
        psi = edge_lift(np.zeros(3), 0, 4, BETA)
        assert np.max(np.abs(psi.c)) == 0.0

    def test_direct_construction_bottom(self):
        w = expand_1d(lambda t: 1 - t**2, BETA, 2)
        psi = edge_lift(w, 0, 2, BETA)
        g = boundary_decay_poly(2, BETA)
        xs = np.linspace(-1, 1, 17)
        assert np.max(np.abs(psi.evaluate(xs, -np.ones_like(xs)) - (1 - xs**2))) < 1e-10
        for X, Y in ((xs, np.ones_like(xs)), (np.ones_like(xs), xs), (-np.ones_like(xs), xs)):
            assert np.max(np.abs(psi.evaluate(X, Y))) < 1e-10
        ys = np.linspace(-1, 1, 7)
        want = np.outer(1 - xs**2, edge_series(g, BETA, ys))
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        assert np.max(np.abs(psi.evaluate(X, Y) - want)) < 1e-10

    @pytest.mark.parametrize("side", [0, 1, 2, 3])
    def test_trace_on_every_side(self, side):
        w = expand_1d(lambda t: (1 - t**2) * (0.5 + t), BETA, 3)
        psi = edge_lift(w, side, 3, BETA)
        t = np.linspace(-1, 1, 21)
        frames = {
            0: (t, -np.ones_like(t)),
            1: (np.ones_like(t), t),
            2: (t, np.ones_like(t)),
            3: (-np.ones_like(t), t),
        }
        X, Y = frames[side]
        got = psi.evaluate(X, Y)
        assert np.max(np.abs(got - edge_series(w, BETA, t))) < 1e-10
        for other, (Xo, Yo) in frames.items():
            if other != side:
                assert np.max(np.abs(psi.evaluate(Xo, Yo))) < 1e-10

    def test_nonvanishing_w_rejected(self):
        w = expand_1d(lambda t: 1 + t, BETA, 1)
        with pytest.raises(ParameterError):
            edge_lift(w, 0, 2, BETA)

    def test_degree_overflow_rejected(self):
        w = expand_1d(lambda t: 1 - t**2, BETA, 2)
        with pytest.raises(ParameterError):
            edge_lift(w, 0, 1, BETA)

    def test_norm_ratio_decay(self):
        rng = np.random.default_rng(4)
        scaled = []
        for p in range(2, 31):
            coeffs = rng.standard_normal(p - 1)
            w = expand_1d(
                lambda t: (1 - t**2) * np.polyval(coeffs, t), BETA, p
            )
            psi = edge_lift(w, 0, p, BETA)
            scaled.append(
                (p + 1) ** (1 + BETA)
                * weighted_norm(psi, WeightSpec(0, BETA))
                / edge_norm_h0(w, BETA)
            )
        assert all(s <= 3.0 * scaled[2] for s in scaled)


class TestLocalInterpolant:
    def test_zero_function(self, mesh2x2):
        loc = local_interpolant(mesh2x2, 4, lambda x, y: 0.0 * x, 3, BETA)
        assert all(np.max(np.abs(c.c)) < 1e-14 for c in loc.parts.values())

    def test_reproduces_tensor_polynomial(self, mesh2x2):
        # u in Q_2 on every element, zero on the domain boundary
        u = lambda x, y: x * (1 - x) * y * (1 - y)
        center = [v for v in range(mesh2x2.n_vertices)
                  if np.allclose(mesh2x2.vertices[v], [0.5, 0.5])][0]
        loc = local_interpolant(mesh2x2, center, u, 2, BETA)
        rng = np.random.default_rng(9)
        pts = rng.uniform(-1, 1, (25, 2))
        for k, part in loc.parts.items():
            phys = geometry(mesh2x2, k).apply(pts)
            want = u(phys[:, 0], phys[:, 1])
            assert np.max(np.abs(part.evaluate(pts[:, 0], pts[:, 1]) - want)) < 1e-10

    def test_construction_guarantees(self, mesh2x2, sine):
        center = 4
        loc = local_interpolant(mesh2x2, center, sine.u, 4, BETA)
        assert loc.continuity_mismatch() < 1e-10
        assert loc.boundary_max() < 1e-10
        # vertex interpolation: matches u at every vertex of the patch
        for k, part in loc.parts.items():
            verts = mesh2x2.vertices[mesh2x2.elements[k]]
            uv = sine.u(verts[:, 0], verts[:, 1])
            assert np.max(np.abs(part.corner_values() - uv)) < 1e-10

    def test_linearity(self, mesh2x2):
        u1 = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
        u2 = lambda x, y: x * (1 - x) * y * (1 - y)
        a, b = 0.7, -1.3
        combo = lambda x, y: a * u1(x, y) + b * u2(x, y)
        l1 = local_interpolant(mesh2x2, 4, u1, 3, BETA)
        l2 = local_interpolant(mesh2x2, 4, u2, 3, BETA)
        lc = local_interpolant(mesh2x2, 4, combo, 3, BETA)
        for k in lc.parts:
            want = a * l1.parts[k].c + b * l2.parts[k].c
            assert np.max(np.abs(lc.parts[k].c - want)) < 1e-10

    def test_exponent_range_enforced(self, mesh2x2, sine):
        for bad in (-0.5, -0.4, 0.2, -1.0):
            with pytest.raises(ParameterError):
                local_interpolant(mesh2x2, 4, sine.u, 3, bad)

    def test_element_error_rate(self, mesh2x2, sine):
        center = 4
        scaled = []
        for p in range(2, 9):
            loc = local_interpolant(mesh2x2, center, sine.u, p, BETA)
            patch = list(loc.parts)
            semi = patch_seminorm(mesh2x2, patch, sine.u, sine.grad_u, BETA, p + 20)
            worst = max(
                element_error_h0(mesh2x2, k, sine.u, loc.parts, BETA, p + 20)
                for k in patch
            )
            scaled.append((p + 1) ** (1.5 + BETA) * worst / semi)
        assert all(s <= 3.0 * scaled[0] for s in scaled)


class TestGlobalInterpolant:
    def test_zero_function(self, mesh2x2):
        iu = global_interpolant(mesh2x2, uniform_degrees(mesh2x2, 3),
                                lambda x, y: 0.0 * x, BETA)
        assert all(np.max(np.abs(c.c)) < 1e-14 for c in iu.parts.values())

    def test_continuity_and_boundary(self, mesh2x2, sine):
        iu = global_interpolant(mesh2x2, uniform_degrees(mesh2x2, 4), sine.u, BETA)
        assert iu.continuous
        assert iu.continuity_mismatch() < 1e-10
        assert iu.boundary_max() < 1e-10

    def test_mixed_degrees(self, sine):
        mesh = load_and_validate(rect_mesh_dict(2, 2))
        degrees = np.array([2, 3, 3, 2])
        iu = global_interpolant(mesh, degrees, sine.u, BETA)
        assert iu.continuity_mismatch() < 1e-10
        assert iu.boundary_max() < 1e-10
        for k in range(4):
            assert iu.parts[k].cutoff == degrees[k]

    def test_degree_floor(self, mesh2x2, sine):
        with pytest.raises(ParameterError):
            global_interpolant(mesh2x2, uniform_degrees(mesh2x2, 1), sine.u, BETA)

    def test_hat_partition_of_unity(self):
        total = sum(hat_function(slot, BETA).c for slot in range(4))
        want = np.zeros((2, 2))
        want[0, 0] = 1.0
        assert np.max(np.abs(total - want)) < 1e-14


@pytest.fixture(scope="module")
def strip():
    return load_and_validate(rect_mesh_dict(2, 1))


class TestJumpLift:
    BSTAR = 0.6

    def _interior_edge(self, mesh):
        return mesh.interior_edges()[0]

    def test_zero_polynomial(self, strip):
        jl = jump_lift(np.zeros(3), self._interior_edge(strip), strip, self.BSTAR)
        pts = np.random.default_rng(0).uniform(-1, 1, (10, 2))
        for k in jl.elements():
            assert np.max(np.abs(jl.value_ref(k, pts))) == 0.0

    def test_trace_identity(self, strip):
        eid = self._interior_edge(strip)
        P = expand_1d(lambda t: 1.0 + 0.3 * t - t**2, self.BSTAR, 2)
        jl = jump_lift(P, eid, strip, self.BSTAR)
        t = np.linspace(-0.999, 0.999, 50)
        phys = strip.edge_points(eid, t)
        want = edge_series(P, self.BSTAR, t) * (1 - t**2) ** self.BSTAR
        for k in jl.elements():
            ref = geometry(strip, k).invert(phys)
            assert np.max(np.abs(jl.value_ref(k, ref) - want)) < 1e-10

    def test_vanishes_on_patch_boundary(self, strip):
        eid = self._interior_edge(strip)
        P = expand_1d(lambda t: 0.4 - t, self.BSTAR, 1)
        jl = jump_lift(P, eid, strip, self.BSTAR)
        t = np.linspace(-1, 1, 33)
        for k in jl.elements():
            for oid in range(strip.n_edges):
                if oid == eid or k not in strip.edges[oid].elems:
                    continue
                phys = strip.edge_points(oid, t)
                ref = geometry(strip, k).invert(phys)
                assert np.max(np.abs(jl.value_ref(k, ref))) < 1e-10

    def test_boundary_edge_rejected(self, strip):
        bdry = [i for i, e in enumerate(strip.edges) if e.boundary][0]
        with pytest.raises(ParameterError):
            jump_lift(np.ones(2), bdry, strip, self.BSTAR)

    def test_exponent_range(self, strip):
        eid = self._interior_edge(strip)
        for bad in (0.5, 1.0, 0.4, -0.6):
            with pytest.raises(ParameterError):
                jump_lift(np.ones(2), eid, strip, bad)

    def test_gradient_against_finite_differences(self, strip):
        eid = self._interior_edge(strip)
        P = expand_1d(lambda t: 0.2 + t**2, self.BSTAR, 2)
        jl = jump_lift(P, eid, strip, self.BSTAR)
        pts = np.array([[0.2, -0.3], [-0.5, 0.4]])
        h = 1e-6
        for k in jl.elements():
            g = jl.grad_ref(k, pts)
            for d in range(2):
                dp = pts.copy(); dp[:, d] += h
                dm = pts.copy(); dm[:, d] -= h
                fd = (jl.value_ref(k, dp) - jl.value_ref(k, dm)) / (2 * h)
                assert np.max(np.abs(g[:, d] - fd)) < 1e-5

    def test_norm_against_oversampled_quadrature(self, strip):
        eid = self._interior_edge(strip)
        P = expand_1d(lambda t: 1.0 - 0.5 * t, self.BSTAR, 1)
        jl = jump_lift(P, eid, strip, self.BSTAR)
        q = 80
        b = self.BSTAR
        rule = cached_rule(q, -b, -b)
        X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        total = sum(
            float(np.einsum("a,b,ab->", rule.weights, rule.weights,
                            jl.value_ref(k, pts).reshape(q, q) ** 2))
            for k in jl.elements()
        )
        assert jl.norm_h0() == pytest.approx(np.sqrt(total), rel=1e-6)

    def test_norm_ratios_bounded(self, strip):
        rng = np.random.default_rng(12)
        eid = self._interior_edge(strip)
        h1_scaled, h0_scaled = [], []
        for p in range(1, 31):
            P = rng.standard_normal(p + 1)
            jl = jump_lift(P, eid, strip, self.BSTAR)
            nP = edge_norm_h0(P, self.BSTAR)
            h1_scaled.append((p + 1) ** (-self.BSTAR) * jl.norm_h1() / nP)
            h0_scaled.append((p + 1) ** (1 - self.BSTAR) * jl.norm_h0() / nP)
        assert all(s <= 3.0 * h1_scaled[3] for s in h1_scaled[3:])
        assert all(s <= 3.0 * h0_scaled[3] for s in h0_scaled[3:])

    def test_orientation_consistency_on_vertical_and_horizontal_edges(self):
        # a 2x2 mesh exercises both edge axes; the two sides must agree on the
        # shared trace for every interior edge
        mesh = load_and_validate(rect_mesh_dict(2, 2))
        for eid in mesh.interior_edges():
            P = expand_1d(lambda t: 0.3 + t, self.BSTAR, 1)
            jl = jump_lift(P, eid, mesh, self.BSTAR)
            t = np.linspace(-0.99, 0.99, 15)
            phys = mesh.edge_points(eid, t)
            vals = []
            for k in jl.elements():
                ref = geometry(mesh, k).invert(phys)
                vals.append(jl.value_ref(k, ref))
            assert np.max(np.abs(vals[0] - vals[1])) < 1e-12


def test_flip_1d_round_trip():
    rng = np.random.default_rng(3)
    b = rng.standard_normal(7)
    t = np.linspace(-1, 1, 11)
    assert np.allclose(edge_series(flip_1d(b), -0.6, t), edge_series(b, -0.6, -t), atol=1e-12)
