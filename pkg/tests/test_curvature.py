import numpy as np
import pytest

from adiaconn.curvature import (
    GridTooCoarseError,
    SurfacePatch,
    berry_curvature_at,
    berry_curvature_levels,
    berry_phase_surface,
    diagonality_residual,
    small_loop_check,
    yang_mills_curvature,
)
from adiaconn.models import Su2Model, constant_model
from adiaconn.geometry import (
    planar_patch,
    planar_rectangle_loop,
    su2_cap_patch,
    su2_wedge_patch,
)
from adiaconn.reference import su2_analytic_curvature, su2_berry_curvature
from adiaconn.transport import holonomy

SZ = np.diag([1.0, -1.0]).astype(complex)


class TestYangMills:
    def test_su2_closed_form(self, su2_half):
        lam = [1.0, np.pi / 3, 0.7]
        f = yang_mills_curvature(su2_half, lam)
        ref = su2_analytic_curvature(0.5, *lam)
        for pair in f.pairs:
            assert np.linalg.norm(f.component(*pair) - ref.component(*pair)) < 1e-6

    def test_constant_model_flat(self):
        model = constant_model(SZ, n_params=2)
        f = yang_mills_curvature(model, [0.3, -0.1])
        assert np.linalg.norm(f.component(0, 1)) < 1e-14

    def test_antisymmetry_of_accessor(self, su2_half):
        f = yang_mills_curvature(su2_half, [1.0, 1.2, 0.3])
        assert np.allclose(f.component(2, 1), -f.component(1, 2))
        assert np.linalg.norm(f.component(1, 1)) == 0.0

    def test_finite_difference_order(self, su2_half):
        # against the closed form, halving a coarse step divides the
        # derivative-term error by about four
        lam = [1.0, 1.05, 0.4]
        ref = su2_analytic_curvature(0.5, *lam).component(1, 2)
        errs = []
        for h in (2e-2, 1e-2):
            f = yang_mills_curvature(su2_half, lam, step=h)
            errs.append(np.linalg.norm(f.component(1, 2) - ref))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)

    def test_stencil_domain_guard(self, oscillator):
        from adiaconn.models import DomainViolationError

        with pytest.raises(DomainViolationError):
            yang_mills_curvature(oscillator, [1.0, 0.0, 1e-7])

    def test_oscillator_matches_analytic_on_certified_block(self, oscillator):
        from adiaconn.reference import oscillator_analytic_curvature

        lam = [2.0, 0.5, 1.5]
        k = oscillator.certified_vector_levels(lam)
        f = yang_mills_curvature(oscillator, lam)
        ref = oscillator_analytic_curvature(*lam, oscillator.nmax)
        for pair in f.pairs:
            diff = f.component(*pair)[:k, :k] - ref.component(*pair)[:k, :k]
            assert np.max(np.abs(diff)) < 1e-4


class TestBerryCurvatureLevels:
    def test_su2_half_levels(self, su2_half):
        lam = [1.0, 0.9, 0.2]
        table = berry_curvature_at(su2_half, lam)
        expected = su2_berry_curvature(0.5, 0.9)  # -m sin(theta), ascending m
        got = [table.value(n, 1, 2) for n in range(2)]
        assert np.allclose(got, expected, atol=1e-12)

    def test_su2_one_middle_level_vanishes(self, su2_one):
        table = berry_curvature_at(su2_one, [1.0, 1.3, 0.5])
        assert table.value(1, 1, 2) == pytest.approx(0.0, abs=1e-12)

    def test_oscillator_level_three(self, oscillator):
        # certified value -(n + 1/2) X / (4 omega^3) at n = 3
        lam = [2.0, 0.5, 1.5]
        omega = np.sqrt(2.75)
        table = berry_curvature_at(oscillator, lam)
        expected = -3.5 * 2.0 / (4.0 * omega**3)
        assert table.value(3, 1, 2) == pytest.approx(expected, rel=1e-9)

    def test_matches_field_strength_diagonal(self, su2_one):
        lam = [1.2, 1.0, 0.8]
        spec = su2_one.spectral_at(lam)
        table = berry_curvature_levels(spec, su2_one.grad_h(lam))
        f = yang_mills_curvature(su2_one, lam)
        diag = np.real(np.diag(spec.to_eigenbasis(f.component(1, 2))))
        got = [table.value(n, 1, 2) for n in range(3)]
        assert np.allclose(diag, got, atol=1e-6)

    def test_antisymmetric_accessor(self, su2_half):
        table = berry_curvature_at(su2_half, [1.0, 1.0, 0.0])
        assert table.value(0, 2, 1) == -table.value(0, 1, 2)
        assert table.value(0, 1, 1) == 0.0


class TestDiagonality:
    def test_su2_half(self, su2_half):
        lam = [1.0, np.pi / 3, 0.0]
        f = yang_mills_curvature(su2_half, lam)
        assert diagonality_residual(f, su2_half.spectral_at(lam)) <= 1e-6

    def test_su2_three_halves_random_points(self, rng):
        model = Su2Model(1.5)
        for _ in range(5):
            lam = [rng.uniform(0.6, 1.8), rng.uniform(0.3, 2.8), rng.uniform(0, 6)]
            f = yang_mills_curvature(model, lam)
            assert diagonality_residual(f, model.spectral_at(lam)) <= 1e-5

    def test_constant_model_zero(self):
        model = constant_model(np.diag([0.0, 1.0, 3.0]).astype(complex), n_params=2)
        f = yang_mills_curvature(model, [0.1, 0.2])
        assert diagonality_residual(f, model.spectral_at([0.1, 0.2])) == 0.0

    def test_oscillator_certified_block(self, oscillator):
        lam = [2.0, 0.5, 1.5]
        f = yang_mills_curvature(oscillator, lam)
        spec = oscillator.spectral_at(lam)
        k = oscillator.certified_vector_levels(lam)
        assert diagonality_residual(f, spec, levels=k) <= 1e-5


class TestSmallLoop:
    def test_su2_difference_and_scaling(self, su2_half):
        report = small_loop_check(su2_half, [1.0, np.pi / 3, 0.0], 1, 2, eps=1e-2)
        assert report.difference <= 1e-5
        assert report.ratio >= 6.0

    def test_constant_model_exact(self):
        model = constant_model(SZ, n_params=2)
        report = small_loop_check(model, [0.0, 0.0], 0, 1, eps=1e-2)
        assert report.difference < 1e-13
        assert report.halved_difference < 1e-13


class TestSurfaceIntegrals:
    def test_cap_phase_matches_solid_angle(self, su2_half):
        omega = np.pi / 2
        patch = su2_cap_patch(omega, grid=(200, 200))
        phase = berry_phase_surface(su2_half, patch, level=1)
        assert phase == pytest.approx(-omega / 2, abs=1e-4)

    def test_degenerate_patch_zero(self, su2_half):
        # collinear edges span zero area, so the pullback vanishes cellwise
        collinear = planar_patch([1.0, 0.5, 0.0], [0.0, 0.4, 0.0], [0.0, 0.8, 0.0],
                                 grid=(8, 8))
        assert berry_phase_surface(su2_half, collinear, level=0) == pytest.approx(0.0, abs=1e-15)

    def test_l1_cap_per_level(self, su2_one):
        omega = 1.2
        patch = su2_cap_patch(omega, grid=(120, 120))
        for level, m in ((0, -1.0), (1, 0.0), (2, 1.0)):
            phase = berry_phase_surface(su2_one, patch, level=level)
            assert phase == pytest.approx(-m * omega, abs=2e-4)

    def test_grid_doubling_guard(self, su2_half):
        patch = su2_cap_patch(np.pi / 2, grid=(3, 3))
        with pytest.raises(GridTooCoarseError):
            berry_phase_surface(su2_half, patch, level=0, refine_check_tol=1e-9)

    def test_degenerate_level_guard(self):
        from adiaconn.operator_core import DegenerateSpectrumError

        model = constant_model(np.diag([1.0, 1.0, 2.0]).astype(complex), n_params=2)
        patch = planar_patch([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], grid=(2, 2))
        with pytest.raises(DegenerateSpectrumError):
            berry_phase_surface(model, patch, level=0)

    def test_stokes_consistency_su2(self, su2_half):
        omega = 0.9
        patch = su2_wedge_patch(omega, grid=(120, 120))
        surf = berry_phase_surface(su2_half, patch, level=1)
        hol = holonomy(su2_half, patch.boundary_path(refinement=12)).phases[1]
        assert surf == pytest.approx(hol, abs=2e-4)

    def test_stokes_consistency_oscillator(self, oscillator):
        origin = [2.0, 0.3, 1.4]
        edge_u = [0.0, 0.25, 0.0]
        edge_v = [0.0, 0.0, 0.25]
        patch = planar_patch(origin, edge_u, edge_v, grid=(60, 60))
        loop = planar_rectangle_loop(origin, edge_u, edge_v, refinement=400)
        hol = holonomy(oscillator, loop)
        surf = berry_phase_surface(oscillator, patch, level=[0, 1, 2, 3])
        assert np.allclose(surf, hol.phases[:4], atol=2e-4)


class TestSurfacePatch:
    def test_grid_validation(self):
        with pytest.raises(ValueError, match="grid"):
            SurfacePatch(chart=lambda u, v: np.array([u, v]), grid=(0, 3))

    def test_cap_boundary_dedupes_pole_edge(self, su2_half):
        patch = su2_cap_patch(1.0, grid=(4, 4))
        path = patch.boundary_path()
        assert path.closed
        deltas = np.diff(path.samples, axis=0)
        assert np.min(np.linalg.norm(deltas, axis=1)) > 0
