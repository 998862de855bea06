"""Backend selection and compiled-vs-python kernel agreement."""

from contextlib import contextmanager

import numpy as np
import pytest

from mvtri import _backend, _pykernels
from mvtri.bench import run_experiment
from mvtri.config import ExperimentConfig
from mvtri.geometry import compose_projection, fundamental_from_projections
from mvtri.scene import NoiseModel, ObjectModel, RigSpec

from conftest import pixel_of, projections, three_view_rig, two_view_pair
from oracles import random_unit_scale_instance

HAVE_COMPILED = "compiled" in _backend.available_backends()
needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled backend not built")


@contextmanager
def using_backend(name):
    previous = _backend.backend_name()
    _backend.set_backend(name)
    try:
        yield _backend.kernels
    finally:
        _backend.set_backend(previous)


class TestSelection:
    def test_python_always_available(self):
        assert "python" in _backend.available_backends()

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            _backend.set_backend("fortran")

    def test_compiled_unavailable_is_error(self):
        if HAVE_COMPILED:
            pytest.skip("compiled backend is built")
        with pytest.raises(ValueError):
            _backend.set_backend("compiled")

    def test_backend_name_reflects_module(self):
        with using_backend("python") as kernels:
            assert kernels.BACKEND_NAME == "python"
            assert _backend.backend_name() == "python"

    @needs_compiled
    def test_switch_to_compiled(self):
        with using_backend("compiled") as kernels:
            assert kernels.BACKEND_NAME == "compiled"
            assert _backend.backend_name() == "compiled"


@needs_compiled
class TestSharedPolicy:
    def test_status_codes_match(self):
        core = _backend._core
        assert core.LM_GRADIENT_SMALL == _pykernels.LM_GRADIENT_SMALL
        assert core.LM_STEP_SMALL == _pykernels.LM_STEP_SMALL
        assert core.LM_MAX_ITERATIONS == _pykernels.LM_MAX_ITERATIONS
        assert core.HS_OK == _pykernels.HS_OK
        assert core.HS_EPIPOLE_AT_POINT == _pykernels.HS_EPIPOLE_AT_POINT
        assert core.HS_RANK_DEFICIENT == _pykernels.HS_RANK_DEFICIENT


@needs_compiled
class TestKernelAgreement:
    def test_poly_real_roots(self):
        core = _backend._core
        rng = np.random.default_rng(77)
        for _ in range(200):
            deg = int(rng.integers(1, 7))
            roots = np.sort(rng.uniform(-3.0, 3.0, size=deg))
            coeffs = np.array([1.0])
            for r in roots:
                coeffs = np.convolve(coeffs, [-r, 1.0])
            coeffs *= rng.uniform(0.5, 2.0)
            got_c = core.poly_real_roots(coeffs, True)
            got_p = _pykernels.poly_real_roots(coeffs, True)
            assert len(got_c) == len(got_p)
            assert np.allclose(got_c, got_p, atol=1e-9)

    def test_poly_real_roots_complex_only(self):
        core = _backend._core
        coeffs = np.array([1.0, 0.0, 1.0])
        assert len(core.poly_real_roots(coeffs, True)) == 0

    def test_triangulate_point_linear(self):
        rng = np.random.default_rng(5)
        core = _backend._core
        for _ in range(100):
            views = three_view_rig(left_deg=float(rng.uniform(6, 15)),
                                   right_deg=float(rng.uniform(6, 15)))
            X = rng.uniform(-4.0, 4.0, size=3)
            obs = np.asarray([pixel_of(v, X) for v in views])
            obs += rng.normal(0.0, 1.0, size=obs.shape)
            Ps = projections(views)
            got_c = core.triangulate_point_linear(Ps, obs)
            got_p = _pykernels.triangulate_point_linear(Ps, obs)
            assert np.allclose(got_c, got_p, atol=1e-8)

    def test_hs_correct_on_pixel_scale_pairs(self):
        rng = np.random.default_rng(6)
        core = _backend._core
        for _ in range(100):
            v1, v2 = two_view_pair(angle_deg=float(rng.uniform(6, 25)))
            F = fundamental_from_projections(compose_projection(v1),
                                             compose_projection(v2))
            X = rng.uniform(-4.0, 4.0, size=3)
            x1 = pixel_of(v1, X) + rng.normal(0.0, 1.0, size=2)
            x2 = pixel_of(v2, X) + rng.normal(0.0, 1.0, size=2)
            sc, c1, c2, _, cost_c = core.hs_correct(F, x1, x2)
            sp, p1, p2, _, cost_p = _pykernels.hs_correct(F, x1, x2)
            assert sc == sp == _pykernels.HS_OK
            assert np.allclose(c1, p1, atol=1e-7)
            assert np.allclose(c2, p2, atol=1e-7)
            assert cost_c == pytest.approx(cost_p, rel=1e-7, abs=1e-12)

    def test_hs_correct_on_unit_scale_pairs(self):
        rng = np.random.default_rng(7)
        core = _backend._core
        for _ in range(100):
            F, x1, x2 = random_unit_scale_instance(rng)
            sc, c1, c2, _, cost_c = core.hs_correct(F, x1, x2)
            sp, p1, p2, _, cost_p = _pykernels.hs_correct(F, x1, x2)
            assert sc == sp == _pykernels.HS_OK
            assert np.allclose(c1, p1, atol=1e-9)
            assert np.allclose(c2, p2, atol=1e-9)
            assert cost_c == pytest.approx(cost_p, rel=1e-7, abs=1e-15)

    def test_hs_correct_degenerate_status(self):
        core = _backend._core
        F = np.outer([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        status, *_ = core.hs_correct(F, np.zeros(2), np.zeros(2))
        assert status == _pykernels.HS_RANK_DEFICIENT

    def test_refine_point_lm(self):
        rng = np.random.default_rng(8)
        core = _backend._core
        for _ in range(50):
            views = three_view_rig()
            X = rng.uniform(-4.0, 4.0, size=3)
            obs = np.asarray([pixel_of(v, X) for v in views])
            obs += rng.normal(0.0, 0.5, size=obs.shape)
            Ps = projections(views)
            x0 = X + rng.normal(0.0, 0.05, size=3)
            args = (Ps, obs, x0, 100, 1e-10, 1e-12, 1e-3)
            xc, cost_c, it_c, code_c = core.refine_point_lm(*args)
            xp, cost_p, it_p, code_p = _pykernels.refine_point_lm(*args)
            assert code_c == code_p
            assert cost_c == pytest.approx(cost_p, rel=1e-6, abs=1e-12)
            assert np.allclose(xc, xp, atol=1e-6)


@needs_compiled
class TestEndToEndAgreement:
    def test_bench_metrics_match(self):
        config = ExperimentConfig(
            id="xbackend",
            object=ObjectModel(kind="planar_grid", extents_cm=(8.0, 8.0, 0.0),
                               grid_counts=(3, 3)),
            rig=RigSpec(kind="angle_study", resolution="low"),
            noise=NoiseModel(sigma_px=0.5),
            trials=2, base_seed=7)
        with using_backend("python"):
            r_py = run_experiment(config)
        with using_backend("compiled"):
            r_c = run_experiment(config)
        # The backends stop LM at slightly different iterates (last-ulp
        # Jacobian differences), so metrics agree only to ~1e-8 relative.
        for a, b in zip(r_py.methods, r_c.methods):
            assert a.method == b.method
            assert a.points_mean == b.points_mean
            assert a.dispersion_mean == pytest.approx(b.dispersion_mean,
                                                      rel=1e-6, abs=1e-9)
            assert a.reproj_mean == pytest.approx(b.reproj_mean,
                                                  rel=1e-6, abs=1e-9)
