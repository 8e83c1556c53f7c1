"""Mesh construction, generators, and topology counts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfheat.errors import TopologyError, ValidationError
from surfheat.fem import assemble_cotan
from surfheat.mesh import (
    TriangleMesh,
    euler_characteristic,
    make_icosphere,
    make_t_junction,
    validate_field,
)

from .conftest import TETRA_TRIANGLES, regular_tetrahedron


def grid_torus(nu: int = 8, nv: int = 8, R: float = 2.0, r: float = 0.7):
    """Triangulated torus from an nu x nv parameter grid (genus 1)."""
    u = 2 * np.pi * np.arange(nu) / nu
    v = 2 * np.pi * np.arange(nv) / nv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = (R + r * np.cos(vv)) * np.cos(uu)
    y = (R + r * np.cos(vv)) * np.sin(uu)
    z = r * np.sin(vv)
    verts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    tris = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            tris.append([a, b, c])
            tris.append([a, c, d])
    return TriangleMesh(verts, np.array(tris))


class TestTriangleMesh:
    def test_tetrahedron_counts(self, tetra):
        assert tetra.n_vertices == 4
        assert tetra.n_triangles == 4
        assert tetra.n_edges == 6
        assert euler_characteristic(tetra) == 2

    def test_tetrahedron_area(self, tetra):
        # four unit equilateral triangles
        assert tetra.area == pytest.approx(np.sqrt(3.0), rel=1e-12)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValidationError):
            TriangleMesh(np.zeros((3, 2)), np.array([[0, 1, 2]]))
        with pytest.raises(ValidationError):
            TriangleMesh(np.eye(3), np.array([[0, 1]]))

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValidationError):
            TriangleMesh(np.eye(3), np.array([[0, 1, 3]]))

    def test_rejects_repeated_index(self):
        with pytest.raises(ValidationError, match="repeats"):
            TriangleMesh(np.eye(3), np.array([[0, 1, 1]]))

    def test_rejects_degenerate_triangle(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], float)
        with pytest.raises(ValidationError, match="degenerate"):
            TriangleMesh(verts, np.array([[0, 1, 2], [0, 1, 3]]))

    def test_rejects_non_finite_vertex(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, np.nan, 0]])
        with pytest.raises(ValidationError, match="finite"):
            TriangleMesh(verts, np.array([[0, 1, 2]]))

    def test_one_ring_symmetry(self, ico1):
        rings = ico1.one_rings
        for v, ring in enumerate(rings):
            for u in ring:
                assert v in rings[u]

    def test_area_invariant_under_reordering(self, ico1):
        rng = np.random.default_rng(3)
        perm = rng.permutation(ico1.n_vertices)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        shuffled_tris = inv[ico1.triangles][rng.permutation(ico1.n_triangles)]
        other = TriangleMesh(ico1.vertices[perm], shuffled_tris)
        assert other.area == pytest.approx(ico1.area, rel=1e-12)

    def test_open_mesh_detected(self):
        tetra = regular_tetrahedron()
        open_mesh = TriangleMesh(tetra.vertices, TETRA_TRIANGLES[:3])
        assert not open_mesh.is_closed_manifold
        with pytest.raises(TopologyError):
            open_mesh.require_closed()

    def test_validate_field(self, tetra):
        out = validate_field(tetra, [1.0, 2.0, 3.0, 4.0])
        assert out.dtype == np.float64
        with pytest.raises(ValidationError):
            validate_field(tetra, [1.0, 2.0])
        with pytest.raises(ValidationError):
            validate_field(tetra, [1.0, np.inf, 0.0, 0.0])


class TestIcosphere:
    def test_s0_is_icosahedron(self, ico0):
        assert ico0.n_vertices == 12
        assert ico0.n_triangles == 20
        assert euler_characteristic(ico0) == 2

    @pytest.mark.parametrize("s", [0, 1, 2, 3, 4])
    def test_vertex_count_formula(self, s):
        mesh = make_icosphere(s)
        assert mesh.n_vertices == 10 * 4**s + 2
        assert euler_characteristic(mesh) == 2

    def test_unit_radius(self, ico2):
        radii = np.linalg.norm(ico2.vertices, axis=1)
        np.testing.assert_allclose(radii, 1.0, atol=1e-12)

    def test_s4_area_near_sphere(self, ico4):
        # discretization deficit below 0.5%
        assert abs(ico4.area - 4 * np.pi) / (4 * np.pi) < 0.005

    def test_outward_orientation(self, ico1):
        # consistent orientation encloses positive volume
        assert ico1.signed_volume() > 0

    def test_subdivision_guard(self):
        with pytest.raises(ValidationError):
            make_icosphere(9)
        with pytest.raises(ValidationError):
            make_icosphere(-1)


class TestTJunction:
    def test_closed_genus_zero(self, tjunction):
        assert euler_characteristic(tjunction) == 2
        assert tjunction.is_closed_manifold

    def test_small_parameters(self):
        mesh = make_t_junction(arm_length=10, width=4, resolution=1)
        assert euler_characteristic(mesh) == 2
        assert (mesh.triangle_areas > 0).all()

    def test_deterministic(self):
        a = make_t_junction(arm_length=10, width=4, resolution=1)
        b = make_t_junction(arm_length=10, width=4, resolution=1)
        np.testing.assert_array_equal(a.vertices, b.vertices)
        np.testing.assert_array_equal(a.triangles, b.triangles)

    def test_has_obtuse_cotan_entry(self, tjunction):
        # the concave junction forces at least one negative off-diagonal
        C = assemble_cotan(tjunction).tocoo()
        off = C.data[C.row != C.col]
        assert (off < 0).any()

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            make_t_junction(arm_length=-1)
        with pytest.raises(ValidationError):
            make_t_junction(arm_length=1, width=1, resolution=0.01)


class TestTopologyInvariants:
    def test_torus_euler_zero(self):
        assert euler_characteristic(grid_torus()) == 0

    @pytest.mark.parametrize(
        "mesh_factory",
        [
            regular_tetrahedron,
            lambda: make_icosphere(1),
            lambda: make_icosphere(2),
            lambda: make_t_junction(10, 4, 1),
            grid_torus,
        ],
    )
    def test_closed_mesh_edge_face_ratio(self, mesh_factory):
        mesh = mesh_factory()
        assert 2 * mesh.n_edges == 3 * mesh.n_triangles
        chi = euler_characteristic(mesh)
        assert chi % 2 == 0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=3, max_value=10), st.integers(min_value=3, max_value=10))
    def test_grid_torus_family(self, nu, nv):
        mesh = grid_torus(nu, nv)
        assert euler_characteristic(mesh) == 0
        assert 2 * mesh.n_edges == 3 * mesh.n_triangles
