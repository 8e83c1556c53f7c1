"""Triangle mesh container, topology/geometry queries, and synthetic generators.

The mesh is the discrete 2-manifold every other module operates on. Instances
are immutable after construction (coordinate and index arrays are set
read-only) so they can be shared freely across workers.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import TopologyError, ValidationError

# Triangles with area below this are rejected as degenerate (mm^2, below the
# geometric noise floor of CT-scale meshes).
DEGENERATE_AREA = 1e-12

# Local edge slots of a triangle (i, j, k) and the vertex opposite each slot.
_EDGE_SLOTS = np.array([[0, 1], [1, 2], [2, 0]])
_OPPOSITE_SLOT = np.array([2, 0, 1])


class TriangleMesh:
    """Triangulated surface in R^3.

    Parameters
    ----------
    vertices : (n, 3) array_like of float
        Vertex coordinates in mm.
    triangles : (m, 3) array_like of int
        Vertex index triples, counterclockwise seen from outside.
    validate : bool, optional
        Run index and degeneracy checks at construction. Default True.

    Notes
    -----
    Edges are not stored; they are derived from the triangles and cached on
    first use, deduplicated by sorted vertex pair. Adjacency (one-ring lists)
    and per-triangle areas are likewise cached lazily.
    """

    def __init__(self, vertices, triangles, validate=True):
        self.vertices = np.array(vertices, dtype=np.float64, copy=True)
        self.triangles = np.array(triangles, dtype=np.int64, copy=True)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValidationError("vertices must have shape (n, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValidationError("triangles must have shape (m, 3)")
        if validate:
            self._validate()
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)

    # -- construction checks -------------------------------------------------

    def _validate(self):
        if not np.isfinite(self.vertices).all():
            raise ValidationError("non-finite vertex coordinate")
        n = len(self.vertices)
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= n:
                raise ValidationError("triangle references an invalid vertex index")
        same = (
            (self.triangles[:, 0] == self.triangles[:, 1])
            | (self.triangles[:, 1] == self.triangles[:, 2])
            | (self.triangles[:, 2] == self.triangles[:, 0])
        )
        if same.any():
            raise ValidationError(
                f"triangle {int(np.flatnonzero(same)[0])} repeats a vertex index"
            )
        bad = self.triangle_areas < DEGENERATE_AREA
        if bad.any():
            idx = np.flatnonzero(bad)
            raise ValidationError(
                f"degenerate triangle(s) with area < {DEGENERATE_AREA}: "
                f"{idx[:10].tolist()}"
            )

    # -- basic counts ---------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    # -- geometry -------------------------------------------------------------

    @cached_property
    def triangle_areas(self):
        """Per-triangle areas in mm^2, 0.5 * |cross(e1, e2)|."""
        v = self.vertices
        t = self.triangles
        e1 = v[t[:, 1]] - v[t[:, 0]]
        e2 = v[t[:, 2]] - v[t[:, 0]]
        return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)

    @property
    def area(self) -> float:
        """Total surface area in mm^2."""
        return float(self.triangle_areas.sum())

    # -- derived topology -----------------------------------------------------

    @cached_property
    def _edge_data(self):
        # All 3m directed tri-edges, canonicalized by sorting each pair.
        tris = self.triangles
        raw = tris[:, _EDGE_SLOTS].reshape(-1, 2)
        raw = np.sort(raw, axis=1)
        edges, inverse = np.unique(raw, axis=0, return_inverse=True)
        counts = np.bincount(inverse, minlength=len(edges))
        return edges, inverse.reshape(-1), counts

    @property
    def edges(self):
        """(E, 2) array of unique undirected edges, each row sorted."""
        return self._edge_data[0]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_counts(self):
        """Number of incident triangles per edge (2 everywhere iff closed)."""
        return self._edge_data[2]

    @cached_property
    def is_closed_manifold(self) -> bool:
        return bool((self.edge_counts == 2).all())

    def require_closed(self, what="this operation"):
        if not self.is_closed_manifold:
            bad = int(np.flatnonzero(self.edge_counts != 2)[0])
            i, j = self.edges[bad]
            raise TopologyError(
                f"{what} requires a closed manifold mesh; edge ({i}, {j}) has "
                f"{int(self.edge_counts[bad])} incident triangles"
            )

    @cached_property
    def one_rings(self):
        """List of per-vertex neighbor index arrays (sorted, no duplicates)."""
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        order = np.argsort(rows, kind="stable")
        rows, cols = rows[order], cols[order]
        starts = np.searchsorted(rows, np.arange(self.n_vertices + 1))
        return [np.sort(cols[starts[v]:starts[v + 1]]) for v in range(self.n_vertices)]

    def euler_characteristic(self) -> int:
        """chi = V - E + F with E the count of unique undirected edges."""
        return self.n_vertices - self.n_edges + self.n_triangles

    # -- misc -----------------------------------------------------------------

    def signed_volume(self) -> float:
        """Enclosed signed volume; positive for outward-oriented closed meshes."""
        v = self.vertices
        t = self.triangles
        return float(np.einsum("ij,ij->", v[t[:, 0]], np.cross(v[t[:, 1]], v[t[:, 2]]))) / 6.0

    def __repr__(self):
        return f"TriangleMesh(n_vertices={self.n_vertices}, n_triangles={self.n_triangles})"


def euler_characteristic(mesh: TriangleMesh) -> int:
    """Euler characteristic chi = V - E + F of a mesh."""
    return mesh.euler_characteristic()


def validate_field(mesh: TriangleMesh, values) -> np.ndarray:
    """Check a per-vertex scalar field against its mesh and return it as float64.

    A field must have one finite value per vertex.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or len(arr) != mesh.n_vertices:
        raise ValidationError(
            f"field length {arr.shape} does not match vertex count {mesh.n_vertices}"
        )
    if not np.isfinite(arr).all():
        raise ValidationError("field contains non-finite values")
    return arr


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def make_icosphere(subdivisions: int) -> TriangleMesh:
    """Unit sphere from repeated 4-to-1 icosahedron subdivision.

    Each subdivision splits every triangle into four and re-projects new
    vertices to radius 1. Vertex count is 10 * 4**s + 2.

    Parameters
    ----------
    subdivisions : int
        Number of subdivision rounds, 0 <= s <= 8 (resource guard).
    """
    s = int(subdivisions)
    if s < 0 or s > 8:
        raise ValidationError("subdivisions must be in [0, 8]")

    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )

    for _ in range(s):
        verts_list = list(verts)
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                p = verts_list[a] + verts_list[b]
                p /= np.linalg.norm(p)
                midpoint[key] = len(verts_list)
                verts_list.append(p)
            return midpoint[key]

        new_faces = np.empty((4 * len(faces), 3), dtype=np.int64)
        for t, (a, b, c) in enumerate(faces):
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces[4 * t:4 * t + 4] = [
                [a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca],
            ]
        verts = np.asarray(verts_list)
        faces = new_faces

    return TriangleMesh(verts, faces)


def _t_junction_occupancy(arm_cells: int, width_cells: int):
    """3D cell-occupancy of the T prism on an integer grid.

    Footprint: a horizontal bar of length 2*arm + width and depth width, and a
    stem of length arm hanging below its middle; extruded width cells in z.
    """
    a, w = arm_cells, width_cells
    nx, ny, nz = 2 * a + w, a + w, w
    occ = np.zeros((nx, ny, nz), dtype=bool)
    occ[:, a:a + w, :] = True          # bar
    occ[a:a + w, :a, :] = True         # stem
    return occ


# Outward-facing quad corner patterns per axis and direction. Each entry lists
# the 4 cell-corner offsets in counterclockwise order seen from outside.
_FACE_CORNERS = {
    (0, +1): [(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)],
    (0, -1): [(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)],
    (1, +1): [(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)],
    (1, -1): [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)],
    (2, +1): [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
    (2, -1): [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)],
}


def _boundary_surface(occ: np.ndarray, spacing: float, origin) -> tuple[np.ndarray, np.ndarray]:
    """Extract the quad boundary surface of a voxel occupancy as triangles."""
    vert_index: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[int, int, int]] = []
    tris: list[list[int]] = []

    def vid(gx, gy, gz):
        key = (gx, gy, gz)
        if key not in vert_index:
            vert_index[key] = len(verts)
            verts.append(key)
        return vert_index[key]

    padded = np.pad(occ, 1, constant_values=False)
    cells = np.argwhere(occ)
    shifts = {0: (1, 0, 0), 1: (0, 1, 0), 2: (0, 0, 1)}
    for axis in (0, 1, 2):
        dx, dy, dz = shifts[axis]
        for sign in (+1, -1):
            # neighbor in padded coordinates (cells are at +1 offset)
            nb = padded[
                cells[:, 0] + 1 + sign * dx,
                cells[:, 1] + 1 + sign * dy,
                cells[:, 2] + 1 + sign * dz,
            ]
            corners = _FACE_CORNERS[(axis, sign)]
            for cx, cy, cz in cells[~nb]:
                q = [vid(cx + ox, cy + oy, cz + oz) for ox, oy, oz in corners]
                tris.append([q[0], q[1], q[2]])
                tris.append([q[0], q[2], q[3]])

    coords = np.asarray(verts, dtype=np.float64) * spacing + np.asarray(origin)
    return coords, np.asarray(tris, dtype=np.int64)


def make_t_junction(arm_length: float = 24.0, width: float = 16.0,
                    resolution: float = 1.0) -> TriangleMesh:
    """Closed T-shaped junction surface with flat, convex and concave zones.

    Three square tubes of side `width` meet at a junction: a horizontal bar of
    total length 2*arm_length + width and a stem of length arm_length below
    its middle, extruded to height `width`, with capped ends. The blocky
    boundary surface is relaxed by two deterministic Laplacian passes so edges
    round off and obtuse triangles appear near the concave junction.

    Parameters
    ----------
    arm_length, width : float
        Dimensions in mm; must be positive multiples of 1/resolution.
    resolution : float
        Vertices per mm along each axis (grid spacing 1/resolution).
    """
    if arm_length <= 0 or width <= 0 or resolution <= 0:
        raise ValidationError("arm_length, width and resolution must be positive")
    a = round(arm_length * resolution)
    w = round(width * resolution)
    if a < 1 or w < 1:
        raise ValidationError("resolution too coarse for the requested dimensions")
    h = 1.0 / resolution

    occ = _t_junction_occupancy(a, w)
    origin = (-(arm_length + width / 2.0), -(arm_length + width / 2.0), 0.0)
    coords, tris = _boundary_surface(occ, h, origin)

    # Two light smoothing passes; factor fixed so the result is deterministic.
    base = TriangleMesh(coords, tris, validate=False)
    rings = base.one_rings
    pos = coords.copy()
    for _ in range(2):
        means = np.empty_like(pos)
        for v, ring in enumerate(rings):
            means[v] = pos[ring].mean(axis=0)
        pos += 0.2 * (means - pos)

    mesh = TriangleMesh(pos, tris)
    # Orientation sanity: generators promise outward-facing triangles.
    if mesh.signed_volume() < 0:
        mesh = TriangleMesh(pos, tris[:, ::-1])
    return mesh
