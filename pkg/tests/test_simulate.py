"""Two-group detection studies: field generation, t statistics, and the
per-method detection report.

The expensive method-separation check (heat kernel beats iterated kernel at
low SNR) reuses the session-scoped T-junction basis and compares medians
over ten seeds, so it is robust to any single unlucky draw.
"""

import numpy as np
import pytest

from surfheat.errors import ValidationError
from surfheat.simulate import (
    DEFAULT_THRESHOLD,
    METHODS,
    DetectionReport,
    SimulationConfig,
    default_signal_regions,
    group_t_stat,
    run_study,
    signal_anchors,
    simulate_fields,
    study_config,
)

from .conftest import slice_basis


def tiny_config(n_signal=3, **overrides):
    base = dict(
        noise_sd=1.0,
        signal_vertices=np.arange(n_signal),
        n1=5,
        n2=5,
        sigma=0.5,
        iterations=20,
        k=10,
        seed=0,
    )
    base.update(overrides)
    return SimulationConfig(**base)


class TestSimulationConfig:
    def test_defaults(self):
        cfg = tiny_config()
        assert cfg.threshold == DEFAULT_THRESHOLD == 4.90

    def test_signal_sorted_unique(self):
        cfg = tiny_config(signal_vertices=[5, 1, 5, 3])
        assert np.array_equal(cfg.signal_vertices, [1, 3, 5])

    @pytest.mark.parametrize(
        "bad",
        [
            dict(noise_sd=0.0),
            dict(noise_sd=-1.0),
            dict(n1=1),
            dict(n2=0),
            dict(sigma=0.0),
            dict(iterations=0),
            dict(signal_vertices=[]),
            dict(signal_vertices=[-1, 2]),
        ],
    )
    def test_validation(self, bad):
        with pytest.raises(ValidationError):
            tiny_config(**bad)


class TestSimulateFields:
    def test_shapes_and_determinism(self, tjunction):
        cfg = tiny_config(n1=4, n2=6)
        g1a, g2a = simulate_fields(tjunction, cfg)
        g1b, g2b = simulate_fields(tjunction, cfg)
        assert g1a.shape == (4, tjunction.n_vertices)
        assert g2a.shape == (6, tjunction.n_vertices)
        assert np.array_equal(g1a, g1b)
        assert np.array_equal(g2a, g2b)
        g1c, _ = simulate_fields(tjunction, tiny_config(n1=4, n2=6, seed=1))
        assert not np.array_equal(g1a, g1c)

    def test_noiseless_limit_mean_difference(self, tjunction):
        # with vanishing noise the group difference is the planted signal:
        # 1 on the discs, 0 elsewhere
        signal = default_signal_regions(tjunction)
        cfg = tiny_config(noise_sd=1e-9, signal_vertices=signal, n1=10, n2=10)
        g1, g2 = simulate_fields(tjunction, cfg)
        diff = g2.mean(axis=0) - g1.mean(axis=0)
        mask = np.zeros(tjunction.n_vertices, dtype=bool)
        mask[signal] = True
        assert np.allclose(diff[mask], 1.0, atol=1e-7)
        assert np.allclose(diff[~mask], 0.0, atol=1e-7)

    def test_half_normal_mean(self, tjunction):
        # |N(0, gamma^2)| has mean gamma*sqrt(2/pi) and variance
        # gamma^2*(1 - 2/pi); the sample mean over all draws must sit
        # within 3 standard errors
        gamma = 2.0
        cfg = tiny_config(noise_sd=gamma, n1=30, n2=30)
        g1, _ = simulate_fields(tjunction, cfg)
        expected = gamma * np.sqrt(2.0 / np.pi)
        se = gamma * np.sqrt(1.0 - 2.0 / np.pi) / np.sqrt(g1.size)
        assert abs(g1.mean() - expected) < 3.0 * se

    def test_signal_out_of_range(self, ico1):
        cfg = tiny_config(signal_vertices=[ico1.n_vertices])
        with pytest.raises(ValidationError, match="out of range"):
            simulate_fields(ico1, cfg)

    def test_signal_everywhere_rejected(self, ico1):
        cfg = tiny_config(signal_vertices=np.arange(ico1.n_vertices))
        with pytest.raises(ValidationError, match="strict subset"):
            simulate_fields(ico1, cfg)


class TestGroupTStat:
    def test_hand_case(self):
        g1 = np.array([[1.0], [3.0]])
        g2 = np.array([[6.0], [8.0]])
        # diff = 5, pooled var = (2 + 2)/2 = 2, se = sqrt(2*(1/2 + 1/2))
        t = group_t_stat(g1, g2)
        assert np.allclose(t, 5.0 / np.sqrt(2.0), rtol=1e-15)

    def test_signed_direction(self):
        rng = np.random.default_rng(0)
        g1 = rng.normal(5.0, 1.0, size=(20, 4))
        g2 = rng.normal(0.0, 1.0, size=(20, 4))
        assert (group_t_stat(g1, g2) < 0).all()
        assert (group_t_stat(g2, g1) > 0).all()

    def test_zero_variance_sentinel_sign(self):
        g1 = np.array([[1.0, 5.0], [1.0, 5.0]])
        g2 = np.array([[3.0, 2.0], [3.0, 2.0]])
        with pytest.warns(RuntimeWarning, match="zero-variance"):
            t = group_t_stat(g1, g2)
        assert t[0] == np.inf
        assert t[1] == -np.inf

    def test_group_size_guard(self):
        with pytest.raises(ValidationError, match="at least 2"):
            group_t_stat(np.ones((1, 3)), np.ones((4, 3)))


class TestSignalRegions:
    def test_three_disjoint_regions(self, tjunction):
        anchors = signal_anchors()
        radii = (6.0, 5.0, 4.0)
        discs = []
        for center, radius in zip(anchors, radii):
            d = np.linalg.norm(tjunction.vertices - center, axis=1)
            discs.append(set(np.flatnonzero(d <= radius).tolist()))
        assert all(discs)
        assert not (discs[0] & discs[1])
        assert not (discs[0] & discs[2])
        assert not (discs[1] & discs[2])

    def test_default_regions_pinned(self, tjunction):
        signal = default_signal_regions(tjunction)
        assert signal.size == 241
        assert np.array_equal(signal, np.unique(signal))

    def test_wrong_mesh_rejected(self, ico1):
        with pytest.raises(ValidationError, match="wrong mesh"):
            default_signal_regions(ico1)


class TestRunStudy:
    def test_empty_methods(self, ico1):
        report = run_study(ico1, tiny_config(), methods=())
        assert report.methods == {}
        assert report.to_dict()["methods"] == {}

    def test_unknown_method(self, ico1):
        with pytest.raises(ValidationError, match="unknown methods"):
            run_study(ico1, tiny_config(), methods=("raw", "bogus"))

    def test_raw_noiseless_detection(self, ico1_system):
        mesh, A, C, basis = ico1_system
        cfg = tiny_config(noise_sd=1e-9, n1=5, n2=5)
        report = run_study(mesh, cfg, methods=("raw",), matrices=(A, C))
        raw = report.methods["raw"]
        assert raw.true_positive_rate == 1.0
        assert raw.false_positive_rate == 0.0

    def test_report_internally_consistent(self, ico1_system):
        mesh, A, C, basis = ico1_system
        cfg = tiny_config(k=20)
        report = run_study(
            mesh, cfg, methods=METHODS,
            basis=slice_basis(basis, 20), matrices=(A, C),
        )
        mask = np.zeros(mesh.n_vertices, dtype=bool)
        mask[cfg.signal_vertices] = True
        for name in METHODS:
            r = report.methods[name]
            detected = r.t_field > cfg.threshold
            assert r.true_positive_rate == detected[mask].mean()
            assert r.false_positive_rate == detected[~mask].mean()

    def test_raw_t_field_matches_direct_computation(self, ico1):
        cfg = tiny_config()
        report = run_study(ico1, cfg, methods=("raw",))
        g1, g2 = simulate_fields(ico1, cfg)
        assert np.array_equal(report.methods["raw"].t_field, group_t_stat(g1, g2))

    def test_to_dict_structure(self, ico1):
        cfg = tiny_config()
        report = run_study(ico1, cfg, methods=("raw",))
        d = report.to_dict()
        assert d["threshold"] == cfg.threshold
        assert d["n_signal_vertices"] == cfg.signal_vertices.size
        assert set(d["methods"]) == {"raw"}
        assert set(d["methods"]["raw"]) == {"tpr", "fpr"}

    def test_same_seed_reproducible(self, ico1_system):
        mesh, A, C, basis = ico1_system
        cfg = tiny_config(k=15)
        kwargs = dict(
            methods=("heat_kernel", "diffusion"),
            basis=slice_basis(basis, 15), matrices=(A, C),
        )
        r1 = run_study(mesh, cfg, **kwargs)
        r2 = run_study(mesh, cfg, **kwargs)
        for name in kwargs["methods"]:
            assert np.array_equal(
                r1.methods[name].t_field, r2.methods[name].t_field
            )

    def test_heat_kernel_beats_iterated_at_low_snr(
        self, tjunction, tj_system, tj_basis
    ):
        # Study-I conditions: strong half-normal noise. The iterated kernel's
        # tiny per-pass bandwidth barely spreads the signal, while the
        # spectral smoother recovers it; medians over 10 seeds.
        _, A, C = tj_system
        hk_tpr, it_tpr = [], []
        for seed in range(10):
            cfg = study_config(1, tjunction, seed=seed)
            report = run_study(
                tjunction, cfg, methods=("heat_kernel", "iterated"),
                basis=tj_basis, matrices=(A, C),
            )
            hk_tpr.append(report.methods["heat_kernel"].true_positive_rate)
            it_tpr.append(report.methods["iterated"].true_positive_rate)
        assert np.median(hk_tpr) > np.median(it_tpr) + 0.5


class TestStudyConfig:
    def test_study_parameters(self, tjunction):
        c1 = study_config(1, tjunction)
        assert (c1.noise_sd, c1.sigma) == (2.0, 0.5)
        c2 = study_config(2, tjunction)
        assert (c2.noise_sd, c2.sigma) == (0.5, 0.1)
        for cfg in (c1, c2):
            assert (cfg.n1, cfg.n2, cfg.iterations, cfg.k) == (30, 30, 100, 1000)
            assert cfg.threshold == 4.90

    def test_overrides_and_seed(self, tjunction):
        cfg = study_config(1, tjunction, seed=7, n1=4, threshold=3.0)
        assert cfg.seed == 7
        assert cfg.n1 == 4
        assert cfg.threshold == 3.0
        explicit = study_config(2, tjunction, signal_vertices=[1, 2])
        assert np.array_equal(explicit.signal_vertices, [1, 2])

    def test_invalid_study(self, tjunction):
        with pytest.raises(ValidationError, match="study"):
            study_config(3, tjunction)
