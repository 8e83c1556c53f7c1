"""Mesh and scalar-field file I/O.

Supported mesh formats: OFF and ASCII PLY, triangles only. Scalar fields are
single-column CSV with header `value`, row i holding the value at vertex i.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import MeshFormatError, ValidationError
from .mesh import TriangleMesh


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Load a triangle mesh from an OFF or ASCII PLY file.

    Parameters
    ----------
    path : str or Path
    format : {"off", "ply", None}
        File format; inferred from the extension when None.

    Raises
    ------
    MeshFormatError
        On parse failure, with the offending line number.
    ValidationError
        If the parsed mesh is invalid (bad indices, degenerate triangles).
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "off":
        return _load_off(path)
    if fmt == "ply":
        return _load_ply(path)
    raise ValidationError(f"unsupported mesh format {fmt!r} (expected off or ply)")


def save_mesh(mesh: TriangleMesh, path, format: str | None = None) -> None:
    """Write a mesh as OFF or ASCII PLY (inferred from extension by default)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "off":
        _save_off(mesh, path)
    elif fmt == "ply":
        _save_ply(mesh, path)
    else:
        raise ValidationError(f"unsupported mesh format {fmt!r} (expected off or ply)")


# ---------------------------------------------------------------------------
# OFF
# ---------------------------------------------------------------------------

def _content_lines(path):
    """Yield (line_number, stripped_line) skipping blanks and # comments."""
    with open(path, "r") as fh:
        for no, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if stripped:
                yield no, stripped


def _load_off(path) -> TriangleMesh:
    lines = _content_lines(path)
    try:
        no, header = next(lines)
    except StopIteration:
        raise MeshFormatError("empty file", line=1) from None
    counts_line = None
    if header != "OFF":
        # Some writers put counts on the header line: "OFF 8 6 12".
        if header.startswith("OFF"):
            counts_line = (no, header[3:].strip())
        else:
            raise MeshFormatError("missing OFF header", line=no)
    if counts_line is None:
        try:
            counts_line = next(lines)
        except StopIteration:
            raise MeshFormatError("missing element counts", line=no) from None
    no, counts = counts_line
    parts = counts.split()
    if len(parts) < 2:
        raise MeshFormatError("expected 'n_vertices n_faces [n_edges]'", line=no)
    try:
        nv, nf = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshFormatError("non-integer element count", line=no) from None

    verts = np.empty((nv, 3), dtype=np.float64)
    for i in range(nv):
        try:
            no, line = next(lines)
        except StopIteration:
            raise MeshFormatError(f"expected {nv} vertices, got {i}", line=no) from None
        fields = line.split()
        if len(fields) < 3:
            raise MeshFormatError("vertex line needs 3 coordinates", line=no)
        try:
            verts[i] = [float(x) for x in fields[:3]]
        except ValueError:
            raise MeshFormatError("non-numeric vertex coordinate", line=no) from None

    tris = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        try:
            no, line = next(lines)
        except StopIteration:
            raise MeshFormatError(f"expected {nf} faces, got {i}", line=no) from None
        fields = line.split()
        try:
            k = int(fields[0])
        except (ValueError, IndexError):
            raise MeshFormatError("face line must start with a vertex count", line=no) from None
        if k != 3:
            raise MeshFormatError(f"non-triangle face with {k} vertices", line=no)
        if len(fields) < 4:
            raise MeshFormatError("truncated face line", line=no)
        try:
            tris[i] = [int(x) for x in fields[1:4]]
        except ValueError:
            raise MeshFormatError("non-integer vertex index", line=no) from None

    return TriangleMesh(verts, tris)


def _save_off(mesh: TriangleMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} 0\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")


# ---------------------------------------------------------------------------
# ASCII PLY
# ---------------------------------------------------------------------------

def _load_ply(path) -> TriangleMesh:
    lines = _content_lines(path)
    try:
        no, magic = next(lines)
    except StopIteration:
        raise MeshFormatError("empty file", line=1) from None
    if magic != "ply":
        raise MeshFormatError("missing ply magic", line=no)

    nv = nf = None
    vertex_props: list[str] = []
    elements: list[tuple[str, int]] = []
    current = None
    for no, line in lines:
        parts = line.split()
        if parts[0] == "format":
            if len(parts) < 2 or parts[1] != "ascii":
                raise MeshFormatError("only ascii PLY is supported", line=no)
        elif parts[0] == "element":
            if len(parts) < 3:
                raise MeshFormatError("malformed element declaration", line=no)
            current = parts[1]
            try:
                count = int(parts[2])
            except ValueError:
                raise MeshFormatError("non-integer element count", line=no) from None
            elements.append((current, count))
            if current == "vertex":
                nv = count
            elif current == "face":
                nf = count
        elif parts[0] == "property" and current == "vertex":
            vertex_props.append(parts[-1])
        elif parts[0] == "end_header":
            break
    else:
        raise MeshFormatError("missing end_header", line=no)
    if nv is None or nf is None:
        raise MeshFormatError("header lacks vertex or face element", line=no)
    for name in ("x", "y", "z"):
        if name not in vertex_props:
            raise MeshFormatError(f"vertex element lacks property {name}", line=no)
    cols = [vertex_props.index(n) for n in ("x", "y", "z")]

    verts = np.empty((nv, 3), dtype=np.float64)
    tris = np.empty((nf, 3), dtype=np.int64)
    for name, count in elements:
        for i in range(count):
            try:
                no, line = next(lines)
            except StopIteration:
                raise MeshFormatError(f"truncated {name} data", line=no) from None
            fields = line.split()
            if name == "vertex":
                if len(fields) < len(vertex_props):
                    raise MeshFormatError("short vertex line", line=no)
                try:
                    verts[i] = [float(fields[c]) for c in cols]
                except ValueError:
                    raise MeshFormatError("non-numeric vertex coordinate", line=no) from None
            elif name == "face":
                try:
                    k = int(fields[0])
                except (ValueError, IndexError):
                    raise MeshFormatError("face line must start with a count", line=no) from None
                if k != 3:
                    raise MeshFormatError(f"non-triangle face with {k} vertices", line=no)
                if len(fields) < 4:
                    raise MeshFormatError("truncated face line", line=no)
                try:
                    tris[i] = [int(x) for x in fields[1:4]]
                except ValueError:
                    raise MeshFormatError("non-integer vertex index", line=no) from None
            # other elements are skipped line by line

    return TriangleMesh(verts, tris)


def _save_ply(mesh: TriangleMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {mesh.n_vertices}\n")
        fh.write("property float64 x\nproperty float64 y\nproperty float64 z\n")
        fh.write(f"element face {mesh.n_triangles}\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")


# ---------------------------------------------------------------------------
# scalar fields (CSV, header `value`)
# ---------------------------------------------------------------------------

def load_field(path) -> np.ndarray:
    """Read a per-vertex scalar field from a single-column CSV with header `value`."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty field file") from None
        if not header or header[0].strip() != "value":
            raise ValidationError(f"{path}: expected CSV header 'value'")
        try:
            values = [float(row[0]) for row in reader if row]
        except (ValueError, IndexError) as exc:
            raise ValidationError(f"{path}: non-numeric field row ({exc})") from None
    return np.asarray(values, dtype=np.float64)


def save_field(values, path) -> None:
    """Write a per-vertex scalar field as CSV with header `value`."""
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        fh.write("value\n")
        for v in values:
            fh.write(f"{v:.17g}\n")
