"""Spherical-harmonic ground truth on the unit sphere and the ringing
(overshoot) experiment for truncated versus heat-kernel-weighted expansions.

Real orthonormal spherical harmonics serve as the analytic reference for the
mesh Laplacian spectrum; the band-step experiment quantifies the overshoot of
a plain least-squares harmonic expansion against its exp(-l(l+1) sigma)
damped counterpart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import sph_harm_y

from .errors import ValidationError
from .mesh import TriangleMesh

_LMAX = 100  # overflow guard for the Legendre recurrence

# Band limits in polar angle (radians).
BAND_LO = 0.125
BAND_HI = 0.25


def real_spherical_harmonic(l: int, m: int, theta, phi):
    """Real orthonormal spherical harmonic of degree l and order m.

    Parameters
    ----------
    l, m : int
        Degree 0 <= l <= 100 and order |m| <= l.
    theta : array_like
        Polar angle from the north pole, radians.
    phi : array_like
        Azimuth, radians.

    Returns
    -------
    float or ndarray, orthonormal under the unit-sphere measure:
    integral of Y_lm * Y_l'm' over the sphere = delta_ll' delta_mm'.
    """
    if l < 0 or abs(m) > l:
        raise ValidationError("need 0 <= |m| <= l")
    if l > _LMAX:
        raise ValidationError(f"degree {l} exceeds the stability guard {_LMAX}")
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    # Complex harmonic with Condon-Shortley phase; real combinations keep
    # orthonormality: sqrt(2) Re / Im for m > 0 / m < 0.
    z = sph_harm_y(l, abs(m), theta, phi)
    if m == 0:
        out = z.real
    elif m > 0:
        out = np.sqrt(2.0) * (-1.0) ** m * z.real
    else:
        out = np.sqrt(2.0) * (-1.0) ** m * z.imag
    return out if out.ndim else float(out)


def sphere_angles(mesh: TriangleMesh, tol: float = 1e-6):
    """Polar/azimuth angles of unit-sphere mesh vertices.

    Raises ValidationError if any vertex is further than tol from radius 1.
    """
    v = mesh.vertices
    r = np.linalg.norm(v, axis=1)
    off = np.abs(r - 1.0)
    if off.max() > tol:
        raise ValidationError(
            f"vertex {int(off.argmax())} is off the unit sphere by {off.max():.2e}"
        )
    theta = np.arccos(np.clip(v[:, 2] / r, -1.0, 1.0))
    phi = np.arctan2(v[:, 1], v[:, 0])
    return theta, phi


def band_step_field(mesh: TriangleMesh) -> np.ndarray:
    """Indicator of the circular band BAND_LO < theta < BAND_HI on the sphere."""
    theta, _ = sphere_angles(mesh)
    return ((theta > BAND_LO) & (theta < BAND_HI)).astype(np.float64)


def harmonic_design_matrix(mesh: TriangleMesh, L: int) -> np.ndarray:
    """n x (L+1)^2 design matrix of harmonics, columns ordered (l, m) with
    l = 0..L and m = -l..l."""
    theta, phi = sphere_angles(mesh)
    cols = []
    for l in range(L + 1):
        for m in range(-l, l + 1):
            cols.append(real_spherical_harmonic(l, m, theta, phi))
    return np.column_stack(cols)


def harmonic_degrees(L: int) -> np.ndarray:
    """Degree l of each design-matrix column."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])


@dataclass(frozen=True)
class GibbsReport:
    """Outcome of the band-step overshoot experiment."""

    lse_overshoot: float
    hk_overshoot: float
    lse_field: np.ndarray
    hk_field: np.ndarray
    L: int
    sigma: float


def gibbs_experiment(mesh: TriangleMesh, L: int = 30, sigma: float = 1e-4) -> GibbsReport:
    """Fit the band step by least squares up to degree L and compare overshoot
    of the plain expansion against the heat-kernel-weighted expansion.

    Overshoot is max over vertices of (reconstruction - step) restricted to
    the 0-region (vertices outside the band), floored at 0.
    """
    if (L + 1) ** 2 >= mesh.n_vertices:
        raise ValidationError("(L+1)^2 must be below the vertex count")
    if sigma < 0:
        raise ValidationError("sigma must be nonnegative")
    step = band_step_field(mesh)
    Psi = harmonic_design_matrix(mesh, L)
    beta, _, rank, _ = np.linalg.lstsq(Psi, step, rcond=None)
    if rank < Psi.shape[1]:
        raise ValidationError(
            "rank-deficient harmonic design matrix; use a finer mesh"
        )
    degrees = harmonic_degrees(L)
    weights = np.exp(-degrees * (degrees + 1.0) * sigma)
    lse_field = Psi @ beta
    hk_field = Psi @ (weights * beta)

    zero_region = step == 0.0
    lse_over = max(0.0, float((lse_field - step)[zero_region].max()))
    hk_over = max(0.0, float((hk_field - step)[zero_region].max()))
    return GibbsReport(lse_over, hk_over, lse_field, hk_field, L, sigma)


def band_mean_value() -> float:
    """Analytic sphere-mean of the band step, (cos(BAND_LO) - cos(BAND_HI))/2."""
    return (np.cos(BAND_LO) - np.cos(BAND_HI)) / 2.0
