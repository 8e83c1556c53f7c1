"""Estimator wrappers: parameter protocol, fitted-state checks, and exact
agreement with the functional smoothing API they delegate to."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from surfheat.errors import ValidationError
from surfheat.estimators import (
    DiffusionSmoother,
    HeatKernelSmoother,
    IteratedKernelSmoother,
)
from surfheat.fem import assemble_cotan, assemble_mass
from surfheat.smooth import (
    diffusion_smooth,
    fit_coefficients,
    fit_coefficients_weighted,
    heat_kernel_smooth,
    iterated_weight_matrix,
)
from surfheat.validation import check_fields_matrix, check_mesh, check_positive

ALL_SMOOTHERS = [
    lambda: HeatKernelSmoother(sigma=0.5, k=25),
    lambda: DiffusionSmoother(sigma=0.5, dt=0.0025),
    lambda: IteratedKernelSmoother(sigma=0.5, m=20),
]


def random_fields(mesh, n_fields=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n_fields, mesh.n_vertices))


class TestEstimatorProtocol:
    @pytest.mark.parametrize("make", ALL_SMOOTHERS)
    def test_fit_returns_self(self, make, ico2):
        est = make()
        assert est.fit(ico2) is est

    @pytest.mark.parametrize("make", ALL_SMOOTHERS)
    def test_not_fitted_error(self, make, ico2):
        with pytest.raises(NotFittedError):
            make().transform(random_fields(ico2))

    @pytest.mark.parametrize("make", ALL_SMOOTHERS)
    def test_clone_preserves_params_drops_state(self, make, ico2):
        est = make().fit(ico2)
        fresh = clone(est)
        assert fresh.get_params() == est.get_params()
        with pytest.raises(NotFittedError):
            fresh.transform(random_fields(ico2))

    def test_get_set_params(self):
        est = HeatKernelSmoother(sigma=0.5, k=25)
        assert est.get_params() == {"sigma": 0.5, "k": 25, "weighted": False}
        est.set_params(sigma=2.0, weighted=True)
        assert est.sigma == 2.0
        assert est.weighted is True

    def test_fitted_attributes(self, ico2):
        hk = HeatKernelSmoother(sigma=0.5, k=25).fit(ico2)
        assert hk.basis_.k == 25
        assert hk.n_vertices_ == ico2.n_vertices
        df = DiffusionSmoother().fit(ico2)
        assert df.mass_matrix_.shape == (ico2.n_vertices,) * 2
        it = IteratedKernelSmoother(m=20).fit(ico2)
        assert it.weight_matrix_.shape == (ico2.n_vertices,) * 2

    def test_rejects_non_mesh(self):
        with pytest.raises(ValidationError, match="TriangleMesh"):
            HeatKernelSmoother(k=5).fit(np.eye(3))

    def test_rejects_bad_params(self, ico2):
        with pytest.raises(ValidationError, match="sigma"):
            HeatKernelSmoother(sigma=-1.0, k=5).fit(ico2)
        with pytest.raises(ValidationError, match="dt"):
            DiffusionSmoother(dt=0.0).fit(ico2)
        with pytest.raises(ValidationError, match="m must"):
            IteratedKernelSmoother(m=0).fit(ico2)


class TestAgreementWithFunctionalAPI:
    def test_heat_kernel_unweighted(self, ico2):
        X = random_fields(ico2)
        est = HeatKernelSmoother(sigma=0.5, k=25).fit(ico2)
        got = est.transform(X)
        coeffs = fit_coefficients(est.basis_, X.T)
        want = heat_kernel_smooth(est.basis_, coeffs, 0.5).T
        assert np.array_equal(got, want)

    def test_heat_kernel_weighted(self, ico2):
        X = random_fields(ico2)
        est = HeatKernelSmoother(sigma=0.5, k=25, weighted=True).fit(ico2)
        got = est.transform(X)
        coeffs = fit_coefficients_weighted(est.basis_, est.mass_matrix_, X.T)
        want = heat_kernel_smooth(est.basis_, coeffs, 0.5).T
        assert np.array_equal(got, want)

    def test_diffusion(self, ico2):
        X = random_fields(ico2)
        got = DiffusionSmoother(sigma=0.5, dt=0.0025).fit(ico2).transform(X)
        A, C = assemble_mass(ico2), assemble_cotan(ico2)
        want = diffusion_smooth(A, C, X.T, 0.5, 0.0025).T
        assert np.array_equal(got, want)

    def test_iterated(self, ico2):
        X = random_fields(ico2)
        m = 20
        got = IteratedKernelSmoother(sigma=0.5, m=m).fit(ico2).transform(X)
        W = iterated_weight_matrix(ico2, 0.5 / m)
        out = X.T
        for _ in range(m):
            out = W @ out
        assert np.array_equal(got, out.T)

    def test_one_dimensional_input(self, ico2):
        est = DiffusionSmoother(sigma=0.1, dt=0.0025).fit(ico2)
        x = random_fields(ico2, n_fields=1)[0]
        got = est.transform(x)
        assert got.shape == (1, ico2.n_vertices)
        assert np.array_equal(got, est.transform(x[np.newaxis, :]))


class TestInputValidation:
    def test_width_mismatch(self, ico2):
        est = IteratedKernelSmoother(m=5).fit(ico2)
        with pytest.raises(ValidationError, match="columns"):
            est.transform(np.zeros((2, ico2.n_vertices + 1)))

    def test_non_finite_rejected(self, ico2):
        est = IteratedKernelSmoother(m=5).fit(ico2)
        X = random_fields(ico2)
        X[0, 3] = np.nan
        with pytest.raises(ValidationError, match="non-finite"):
            est.transform(X)

    def test_check_fields_matrix(self):
        out = check_fields_matrix([1.0, 2.0, 3.0], 3)
        assert out.shape == (1, 3)
        assert out.dtype == np.float64
        with pytest.raises(ValidationError, match="2-D"):
            check_fields_matrix(np.zeros((2, 2, 2)), 2)
        with pytest.raises(ValidationError, match="columns"):
            check_fields_matrix(np.zeros((2, 4)), 3)
        with pytest.raises(ValidationError, match="non-finite"):
            check_fields_matrix([np.inf, 0.0], 2)

    def test_check_positive(self):
        assert check_positive(2, "x") == 2.0
        with pytest.raises(ValidationError, match="gamma"):
            check_positive(0.0, "gamma")
        with pytest.raises(ValidationError, match="gamma"):
            check_positive(-1.0, "gamma")

    def test_check_mesh_passthrough(self, ico1):
        assert check_mesh(ico1) is ico1
        with pytest.raises(ValidationError, match="got ndarray"):
            check_mesh(np.eye(3))
