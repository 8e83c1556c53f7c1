"""Input validation helpers shared by the estimator layer and CLI."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .mesh import TriangleMesh


def check_mesh(mesh) -> TriangleMesh:
    if not isinstance(mesh, TriangleMesh):
        raise ValidationError(
            f"expected a TriangleMesh, got {type(mesh).__name__}"
        )
    return mesh


def check_fields_matrix(X, n_vertices: int) -> np.ndarray:
    """Coerce to a (n_fields, n_vertices) float matrix; 1-D input becomes a
    single row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2:
        raise ValidationError("fields must be a vector or a 2-D matrix")
    if X.shape[1] != n_vertices:
        raise ValidationError(
            f"fields have {X.shape[1]} columns, mesh has {n_vertices} vertices"
        )
    if not np.isfinite(X).all():
        raise ValidationError("fields contain non-finite values")
    return X


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValidationError(f"{name} must be positive")
    return value
