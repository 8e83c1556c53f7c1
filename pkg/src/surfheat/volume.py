"""Binary-volume topology correction and isosurface extraction.

Pipeline: keep the largest foreground component, then run axis-sequential
2D morphological closings (x, then y, then z) to patch cavities that a
single 3D closing leaves open, then extract a triangle mesh and verify it
is a closed 2-manifold with sphere topology.

Voxel layout is x-fastest: linear index = x + nx*(y + ny*z). On disk a
volume is raw little-endian uint8 plus a JSON sidecar
{dims, spacing, order: "x-fastest"}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage import measure

from .errors import TopologyError, ValidationError
from .mesh import TriangleMesh

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class BinaryVolume:
    """0/1 voxel grid, data indexed [x, y, z], spacing in mm per axis."""

    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValidationError("volume data must be 3-dimensional")
        if data.size == 0:
            raise ValidationError("volume dims must be positive")
        vals = np.unique(data)
        if not np.isin(vals, (0, 1)).all():
            raise ValidationError("volume data must be 0/1")
        data = np.ascontiguousarray(data.astype(np.uint8))
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise ValidationError("spacing must be three positive values")
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple:
        return self.data.shape

    @property
    def n_foreground(self) -> int:
        return int(self.data.sum())


def save_volume(vol: BinaryVolume, path) -> None:
    """Raw uint8 voxels in x-fastest order plus a `.json` sidecar."""
    path = Path(path)
    path.write_bytes(vol.data.tobytes(order="F"))
    sidecar = {
        "dims": list(vol.dims),
        "spacing": list(vol.spacing),
        "order": "x-fastest",
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2) + "\n"
    )


def load_volume(path, sidecar=None) -> BinaryVolume:
    path = Path(path)
    sidecar_path = (
        Path(sidecar) if sidecar is not None
        else path.with_suffix(path.suffix + ".json")
    )
    if not sidecar_path.exists():
        raise ValidationError(f"missing volume sidecar {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    if sidecar.get("order") != "x-fastest":
        raise ValidationError(f"unsupported voxel order {sidecar.get('order')!r}")
    dims = tuple(int(d) for d in sidecar["dims"])
    raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
    if raw.size != int(np.prod(dims)):
        raise ValidationError(
            f"raw size {raw.size} does not match dims {dims}"
        )
    data = raw.reshape(dims, order="F")
    return BinaryVolume(data=data, spacing=tuple(sidecar.get("spacing", (1, 1, 1))))


def _label_structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValidationError("connectivity must be 6 or 26")


def largest_component(vol: BinaryVolume, connectivity: int = 26) -> BinaryVolume:
    """Keep only the largest foreground component.

    Size ties break toward the component whose first voxel has the lowest
    x-fastest linear index.
    """
    if vol.n_foreground == 0:
        raise ValidationError("volume has no foreground voxels")
    labels, n = ndimage.label(vol.data, structure=_label_structure(connectivity))
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    best = sizes.max()
    tied = np.flatnonzero(sizes == best)
    if tied.size > 1:
        # first tied label encountered in x-fastest scan order wins
        flat = labels.ravel(order="F")
        hit = flat[np.isin(flat, tied)][0]
    else:
        hit = tied[0]
    return BinaryVolume(data=(labels == hit).astype(np.uint8), spacing=vol.spacing)


def close_2d_sweep(vol: BinaryVolume, axis: str, radius: int = 1) -> BinaryVolume:
    """Morphological closing of every 2D slice perpendicular to `axis` with a
    (2*radius+1)^2 square structuring element (8-connectivity semantics).

    Slices are padded with background by `radius` in-plane so border voxels
    close against an unbounded background, keeping the operation extensive.
    """
    if axis not in _AXES:
        raise ValidationError("axis must be one of x, y, z")
    if radius < 1:
        raise ValidationError("radius must be >= 1")
    ax = _AXES[axis]
    side = 2 * radius + 1
    shape = [side, side, side]
    shape[ax] = 1
    structure = np.ones(shape, dtype=bool)
    pad = [(radius, radius)] * 3
    pad[ax] = (0, 0)
    padded = np.pad(vol.data.astype(bool), pad)
    closed = ndimage.binary_closing(padded, structure=structure)
    sl = [slice(radius, -radius)] * 3
    sl[ax] = slice(None)
    return BinaryVolume(data=closed[tuple(sl)].astype(np.uint8), spacing=vol.spacing)


def close_3d(vol: BinaryVolume, radius: int = 1) -> BinaryVolume:
    """Single 3D closing with the 6-connected cross structuring element,
    the comparator the sequential 2D sweeps are designed to beat on
    open-mouthed cavities."""
    if radius < 1:
        raise ValidationError("radius must be >= 1")
    structure = ndimage.iterate_structure(
        ndimage.generate_binary_structure(3, 1), radius
    )
    padded = np.pad(vol.data.astype(bool), radius)
    closed = ndimage.binary_closing(padded, structure=structure)
    core = closed[radius:-radius, radius:-radius, radius:-radius]
    return BinaryVolume(data=core.astype(np.uint8), spacing=vol.spacing)


def topo_correct(
    vol: BinaryVolume, radius: int = 1, connectivity: int = 26
) -> BinaryVolume:
    """largest_component, then 2D closing sweeps along x, y, z in order."""
    out = largest_component(vol, connectivity=connectivity)
    for axis in ("x", "y", "z"):
        out = close_2d_sweep(out, axis, radius=radius)
    return out


def marching_cubes(vol: BinaryVolume, iso: float = 0.5) -> TriangleMesh:
    """Triangle mesh of the iso-surface.

    The volume is padded internally with a 1-voxel background border so the
    surface is watertight even when foreground touches the array boundary.
    Vertices land on voxel-edge midpoints (binary data, level 0.5) scaled
    by spacing.
    """
    if vol.n_foreground == 0:
        raise ValidationError("volume has no foreground voxels")
    padded = np.pad(vol.data, 1).astype(np.float64)
    verts, faces, _, _ = measure.marching_cubes(
        padded, level=iso, spacing=vol.spacing, allow_degenerate=False
    )
    verts = verts - np.asarray(vol.spacing)  # undo the pad shift
    return TriangleMesh(vertices=verts, triangles=faces.astype(np.int64))


def validate_closed(mesh: TriangleMesh) -> dict:
    """Counts and closed-2-manifold checks: every edge on exactly two
    triangles, and the sphere relation V - F/2 = 2."""
    v = int(mesh.n_vertices)
    f = int(mesh.n_triangles)
    e = int(mesh.edges.shape[0])
    edge_manifold = bool((mesh.edge_counts == 2).all())
    return {
        "V": v,
        "E": e,
        "F": f,
        "chi": v - e + f,
        "edge_manifold": edge_manifold,
        "is_sphere": (2 * v - f) == 4,
    }


def require_sphere_topology(mesh: TriangleMesh) -> dict:
    """validate_closed, raising TopologyError unless chi = 2 on a closed
    edge-manifold mesh."""
    report = validate_closed(mesh)
    if not report["edge_manifold"] or report["chi"] != 2:
        raise TopologyError(
            f"surface is not a topological sphere: chi={report['chi']}, "
            f"edge_manifold={report['edge_manifold']}"
        )
    return report


def make_torus_phantom() -> BinaryVolume:
    """Solid block with a 1-voxel-wide through-tunnel (genus 1)."""
    data = np.zeros((9, 9, 7), dtype=np.uint8)
    data[1:8, 1:8, 2:5] = 1
    data[4, 4, 2:5] = 0
    return BinaryVolume(data=data)


def make_cavity_phantom() -> BinaryVolume:
    """9^3 solid block with a 3^3 interior pocket vented by a 1-voxel mouth.

    The pocket sits at the block center; the mouth is a single-voxel channel
    from the pocket to the +z face. A 6-connected 3D closing cannot seal the
    mouth, while the x/y/z sequence of 2D square closings does.
    """
    data = np.zeros((13, 13, 13), dtype=np.uint8)
    data[2:11, 2:11, 2:11] = 1
    data[5:8, 5:8, 5:8] = 0
    data[6, 6, 8:11] = 0
    return BinaryVolume(data=data)


def cavity_patched(vol: BinaryVolume) -> bool:
    """True when the phantom's mouth voxels are foreground and its pocket is
    no longer reachable from the border through background (6-connectivity)."""
    mouth_filled = bool(vol.data[6, 6, 8:11].all())
    bg = vol.data == 0
    labels, _ = ndimage.label(bg, structure=ndimage.generate_binary_structure(3, 1))
    border_labels = set(np.unique(labels[0, :, :])) | set(np.unique(labels[-1, :, :]))
    border_labels |= set(np.unique(labels[:, 0, :])) | set(np.unique(labels[:, -1, :]))
    border_labels |= set(np.unique(labels[:, :, 0])) | set(np.unique(labels[:, :, -1]))
    border_labels.discard(0)
    pocket = labels[6, 6, 6]
    pocket_open = pocket != 0 and pocket in border_labels
    return mouth_filled and not pocket_open
