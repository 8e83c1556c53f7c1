"""Shared fixtures.

Expensive artifacts (meshes, FEM matrices, eigenbases) are session-scoped so
the acceptance suite and the module tests pay for each solve once. The
T-junction basis at k = 1000 is the dominant cost (~30 s); everything that
needs fewer pairs slices it instead of re-solving.
"""

import numpy as np
import pytest

from surfheat.eigen import EigenBasis, solve_smallest
from surfheat.fem import assemble_cotan, assemble_mass
from surfheat.mesh import TriangleMesh, make_icosphere, make_t_junction

TETRA_TRIANGLES = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])


def regular_tetrahedron(edge: float = 1.0) -> TriangleMesh:
    """Closed regular tetrahedron with the requested edge length."""
    s = edge / (2.0 * np.sqrt(2.0))
    vertices = s * np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    )
    return TriangleMesh(vertices, TETRA_TRIANGLES)


def slice_basis(basis: EigenBasis, k: int) -> EigenBasis:
    """First k+1 pairs of a larger basis (same solve, no recomputation)."""
    m = k + 1
    return EigenBasis(
        basis.eigenvalues[:m],
        basis.eigenvectors[:, :m],
        mesh_id=basis.mesh_id,
        residual_norms=basis.residual_norms[:m],
    )


@pytest.fixture(scope="session")
def tetra():
    return regular_tetrahedron()


@pytest.fixture(scope="session")
def ico0():
    return make_icosphere(0)


@pytest.fixture(scope="session")
def ico1():
    return make_icosphere(1)


@pytest.fixture(scope="session")
def ico2():
    return make_icosphere(2)


@pytest.fixture(scope="session")
def ico4():
    return make_icosphere(4)


@pytest.fixture(scope="session")
def ico5():
    return make_icosphere(5)


@pytest.fixture(scope="session")
def ico1_system(ico1):
    """(mesh, A, C, full dense basis) on the 42-vertex sphere."""
    A, C = assemble_mass(ico1), assemble_cotan(ico1)
    basis = solve_smallest(A, C, ico1.n_vertices - 1, mesh_id="ico1")
    return ico1, A, C, basis


@pytest.fixture(scope="session")
def ico2_system(ico2):
    """(mesh, A, C, k=40 basis) on the 162-vertex sphere."""
    A, C = assemble_mass(ico2), assemble_cotan(ico2)
    basis = solve_smallest(A, C, 40, mesh_id="ico2")
    return ico2, A, C, basis


@pytest.fixture(scope="session")
def ico4_system(ico4):
    """(mesh, A, C, k=200 basis) on the 2562-vertex sphere."""
    A, C = assemble_mass(ico4), assemble_cotan(ico4)
    basis = solve_smallest(A, C, 200, mesh_id="ico4")
    return ico4, A, C, basis


@pytest.fixture(scope="session")
def tjunction():
    return make_t_junction(arm_length=24.0, width=16.0, resolution=1.0)


@pytest.fixture(scope="session")
def tj_system(tjunction):
    A, C = assemble_mass(tjunction), assemble_cotan(tjunction)
    return tjunction, A, C


@pytest.fixture(scope="session")
def tj_basis(tj_system):
    """k = 1000 basis on the T-junction; the suite's dominant solve."""
    _, A, C = tj_system
    return solve_smallest(A, C, 1000, mesh_id="t-junction")
