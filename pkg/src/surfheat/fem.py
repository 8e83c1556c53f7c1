"""Assembly of the FEM matrices A (mass-like) and C (cotan) on a triangle mesh.

Both matrices are n x n, symmetric, and sparse with the mesh edge sparsity
pattern plus the diagonal. A carries units of mm^2 (its total sum equals the
surface area); C is dimensionless, positive semidefinite, and annihilates
constants (every row sums to zero).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .mesh import TriangleMesh, _EDGE_SLOTS, _OPPOSITE_SLOT


def _tri_edge_arrays(mesh: TriangleMesh):
    """Row/col indices of all 3m per-triangle edges plus the opposite vertex."""
    tris = mesh.triangles
    ij = tris[:, _EDGE_SLOTS]                # (m, 3, 2)
    rows = ij[:, :, 0].reshape(-1)
    cols = ij[:, :, 1].reshape(-1)
    opp = tris[:, _OPPOSITE_SLOT].reshape(-1)
    return rows, cols, opp


def _symmetric_from_offdiag(n, rows, cols, vals, diag_from_rowsum: str) -> sp.csr_matrix:
    """Assemble a symmetric matrix from off-diagonal contributions.

    diag_from_rowsum is "+": diagonal = sum of off-diagonal row entries
    (mass convention), or "-": diagonal = negative row sum (cotan convention).
    """
    off = sp.coo_matrix(
        (np.concatenate([vals, vals]),
         (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    ).tocsr()
    off.sum_duplicates()
    rowsum = np.asarray(off.sum(axis=1)).ravel()
    sign = 1.0 if diag_from_rowsum == "+" else -1.0
    return (off + sp.diags(sign * rowsum)).tocsr()


def assemble_mass(mesh: TriangleMesh) -> sp.csr_matrix:
    """Mass-like matrix A: off-diagonal A_ij = (|T+| + |T-|)/12 for edge (i, j).

    |T+| and |T-| are the areas of the two triangles sharing the edge; the
    diagonal is the sum of the off-diagonal row entries. Requires a closed
    manifold mesh (every edge shared by exactly two triangles).
    """
    mesh.require_closed("mass matrix assembly")
    rows, cols, _ = _tri_edge_arrays(mesh)
    # Each triangle deposits |T|/12 on its three edges; the two sharing
    # triangles of an edge sum to (|T+| + |T-|)/12 after deduplication.
    vals = np.repeat(mesh.triangle_areas / 12.0, 3)
    return _symmetric_from_offdiag(mesh.n_vertices, rows, cols, vals, "+")


def assemble_cotan(mesh: TriangleMesh) -> sp.csr_matrix:
    """Cotan matrix C: off-diagonal C_ij = -1/2 (cot theta_ij + cot phi_ij).

    theta_ij and phi_ij are the angles opposite edge (i, j) in its two sharing
    triangles; the diagonal is the negative off-diagonal row sum, so C 1 = 0.
    Obtuse opposite angles yield positive off-diagonal entries and are kept
    as-is. Requires a closed manifold mesh.
    """
    mesh.require_closed("cotan matrix assembly")
    rows, cols, opp = _tri_edge_arrays(mesh)
    v = mesh.vertices
    # cot of the angle at the opposite vertex, via dot/|cross| of the two
    # emanating edge vectors (stable near 0 and pi).
    e1 = v[rows] - v[opp]
    e2 = v[cols] - v[opp]
    cross = np.linalg.norm(np.cross(e1, e2), axis=1)
    dot = np.einsum("ij,ij->i", e1, e2)
    bad = cross <= 2.0 * np.finfo(np.float64).tiny
    if bad.any():
        t = int(np.flatnonzero(bad)[0]) // 3
        raise ValidationError(f"degenerate angle in triangle {t}")
    vals = -0.5 * (dot / cross)
    return _symmetric_from_offdiag(mesh.n_vertices, rows, cols, vals, "-")


def dump_coo(matrix, path) -> None:
    """Write a sparse matrix as 'row col value' text lines for external checks."""
    coo = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        for r, c, x in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {x:.17g}\n")
