import numpy as np
import pytest

from adiaconn.models import (
    DomainViolationError,
    ModelFileError,
    OscillatorModel,
    Su2Model,
    angular_momentum,
    constant_model,
    parse_model_file,
    serialize_model_spec,
    spherical_axes,
)

from conftest import random_polynomial_model

SZ = np.diag([1.0, -1.0]).astype(complex)


class TestAngularMomentum:
    @pytest.mark.parametrize("l", [0.5, 1.0, 1.5, 2.0])
    def test_commutators(self, l):
        jx, jy, jz = angular_momentum(l)
        assert np.linalg.norm(jx @ jy - jy @ jx - 1j * jz) < 1e-12
        assert np.linalg.norm(jy @ jz - jz @ jy - 1j * jx) < 1e-12
        assert np.linalg.norm(jz @ jx - jx @ jz - 1j * jy) < 1e-12

    def test_casimir(self):
        jx, jy, jz = angular_momentum(1.5)
        j2 = jx @ jx + jy @ jy + jz @ jz
        assert np.allclose(j2, 1.5 * 2.5 * np.eye(4))

    def test_jz_ascending(self):
        _, _, jz = angular_momentum(1.0)
        assert np.allclose(np.diag(jz), [-1.0, 0.0, 1.0])

    def test_rejects_bad_l(self):
        with pytest.raises(ValueError):
            angular_momentum(0.7)


class TestSu2Model:
    def test_north_pole_hamiltonian(self, su2_half):
        # B Jz in the ascending-m basis: diag(-1/2, +1/2)
        h = su2_half.eval_h([1.0, 0.0, 0.3])
        assert np.allclose(h, np.diag([-0.5, 0.5]))

    def test_north_pole_frame_identity(self, su2_half):
        spec = su2_half.spectral_at([1.0, 0.0, 0.0])
        assert np.allclose(spec.eigenvalues, [-0.5, 0.5])
        assert np.allclose(spec.frame.matrix, np.eye(2), atol=1e-14)

    def test_l1_equally_spaced(self, su2_one):
        spec = su2_one.spectral_at([1.7, 0.9, 2.2])
        assert np.allclose(spec.eigenvalues, [-1.7, 0.0, 1.7], atol=1e-12)

    def test_phi_periodicity(self, su2_half, rng):
        lam = np.array([1.2, rng.uniform(0.1, 3.0), rng.uniform(0, 2 * np.pi)])
        shifted = lam + np.array([0.0, 0.0, 2 * np.pi])
        assert np.linalg.norm(su2_half.eval_h(lam) - su2_half.eval_h(shifted)) < 1e-12

    def test_grad_b_direction(self, su2_half):
        lam = [2.0, 1.1, 0.4]
        n_hat, _, _ = spherical_axes(1.1, 0.4)
        expected = su2_half.j_dot(n_hat)
        assert np.allclose(su2_half.grad_h(lam)[0], expected, atol=1e-13)

    def test_grad_theta_closed_form(self, su2_half):
        # at phi = 0 the polar tangent direction is cos(theta) Jx - sin(theta) Jz
        theta = 0.8
        jx, _, jz = angular_momentum(0.5)
        expected = np.cos(theta) * jx - np.sin(theta) * jz
        assert np.allclose(su2_half.grad_h([1.0, theta, 0.0])[1], expected, atol=1e-13)

    def test_analytic_grad_matches_central_difference(self, su2_half, rng):
        for _ in range(5):
            lam = [rng.uniform(0.5, 2), rng.uniform(0.3, 2.8), rng.uniform(0, 6)]
            exact = su2_half.grad_h(lam, scheme="analytic")
            fd = su2_half.grad_h(lam, scheme="central")
            for a, b in zip(exact, fd):
                scale = max(np.linalg.norm(a), 1.0)
                assert np.linalg.norm(a - b) / scale < 1e-6

    def test_fd_order_two(self, su2_half):
        # with a coarse step the truncation term dominates and halving the
        # step divides the error by about four
        lam = np.array([1.0, 1.1, 0.7])
        exact = su2_half.grad_h(lam, scheme="analytic")[1]
        errs = []
        for h in (1e-3, 5e-4):
            fd = su2_half.grad_h(lam, scheme="central", step=h)[1]
            errs.append(np.linalg.norm(fd - exact))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)

    def test_domain_rejects_nonpositive_field(self, su2_half):
        with pytest.raises(DomainViolationError):
            su2_half.eval_h([0.0, 1.0, 0.0])


class TestOscillatorModel:
    def test_reference_point_spectrum(self, oscillator):
        spec = oscillator.spectral_at([1.0, 0.0, 1.0])
        n = np.arange(oscillator.trust_levels)
        assert np.allclose(spec.eigenvalues[: len(n)], n + 0.5, atol=1e-12)

    def test_unbound_point_rejected(self, oscillator):
        with pytest.raises(DomainViolationError):
            oscillator.eval_h([1.0, 2.0, 1.0])

    def test_canonical_commutator_below_edge(self, oscillator):
        comm = oscillator.q @ oscillator.p - oscillator.p @ oscillator.q
        block = comm[:-1, :-1]
        assert np.linalg.norm(block - 1j * np.eye(oscillator.nmax - 1), np.inf) < 1e-10

    def test_squeezed_point_frequency(self, oscillator):
        lam = [2.0, 0.5, 1.5]
        omega = np.sqrt(2.75)
        k = oscillator.certified_levels(lam, tol=1e-8)
        assert k >= 20
        spec = oscillator.spectral_at(lam)
        n = np.arange(k)
        assert np.max(np.abs(spec.eigenvalues[:k] - omega * (n + 0.5))) < 1e-8

    def test_truncation_confinement(self, oscillator):
        # mild squeezing keeps the whole trusted window accurate
        assert oscillator.certified_levels([1.1, 0.05, 0.95]) == oscillator.trust_levels

    def test_vector_certification_is_stricter(self, oscillator):
        lam = [2.0, 0.5, 1.5]
        assert oscillator.certified_vector_levels(lam) <= oscillator.certified_levels(lam)
        assert oscillator.certified_vector_levels(lam) >= 12

    def test_grad_is_constant_and_hermitian(self, oscillator):
        g1 = oscillator.grad_h([1.0, 0.0, 1.0])
        g2 = oscillator.grad_h([2.0, 0.5, 1.5])
        for a, b in zip(g1, g2):
            assert np.allclose(a, b)
            assert np.allclose(a, a.conj().T)

    def test_fd_step_shrinks_near_boundary(self):
        osc = OscillatorModel(12, 4)
        # ZX - Y^2 = 4e-6 at this point; the default step crosses the edge
        lam = np.array([1.0, 0.0, 4e-6])
        grads = osc.grad_h(lam, scheme="central")
        assert all(np.all(np.isfinite(g.view(float))) for g in grads)

    def test_fd_step_errors_when_shrink_insufficient(self):
        osc = OscillatorModel(12, 4)
        # even the shrunk step crosses the domain edge here
        with pytest.raises(DomainViolationError, match="shrinking"):
            osc.grad_h(np.array([1.0, 0.0, 1e-8]), scheme="central")


class TestPolynomialModels:
    def test_gradients_match_finite_differences(self, rng):
        model = random_polynomial_model(rng)
        lam = [0.3, -0.2]
        exact = model.grad_h(lam, scheme="analytic")
        fd = model.grad_h(lam, scheme="central")
        for a, b in zip(exact, fd):
            assert np.linalg.norm(a - b) < 1e-6

    def test_constant_model(self):
        model = constant_model(SZ, n_params=2)
        assert np.allclose(model.eval_h([0.4, -1.0]), SZ)
        assert all(np.allclose(g, 0) for g in model.grad_h([0.4, -1.0]))


GOOD_FILE = """
# comment line
dim = 2
params = a b

term 0 0
1 0
0 -1

term 1 0
0 0.5-0.25i
0.5+0.25i 0

term 0 2
0.25 2i
-2i -0.25
"""


class TestModelFiles:
    def test_parse_and_evaluate(self):
        spec = parse_model_file(GOOD_FILE)
        assert spec.dim == 2
        assert spec.param_names == ("a", "b")
        assert len(spec.terms) == 3
        model = spec.to_model()
        h = model.eval_h([2.0, 1.0])
        expected = (
            np.diag([1.0, -1.0])
            + 2.0 * np.array([[0, 0.5 - 0.25j], [0.5 + 0.25j, 0]])
            + np.array([[0.25, 2j], [-2j, -0.25]])
        )
        assert np.allclose(h, expected)

    def test_round_trip(self):
        spec = parse_model_file(GOOD_FILE)
        again = parse_model_file(serialize_model_spec(spec))
        assert again.dim == spec.dim
        assert again.param_names == spec.param_names
        for (ea, ma), (eb, mb) in zip(again.terms, spec.terms):
            assert ea == eb
            assert np.array_equal(ma, mb)

    def test_row_width_mismatch_reports_line(self):
        bad = "dim = 2\nparams = a\nterm 0\n1 0 0\n0 1\n"
        with pytest.raises(ModelFileError, match="line 4"):
            parse_model_file(bad)

    def test_extra_rows_rejected(self):
        bad = "dim = 2\nparams = a\nterm 0\n1 0\n0 1\n0 0\n"
        with pytest.raises(ModelFileError, match="unrecognized"):
            parse_model_file(bad)

    def test_non_hermitian_term_rejected(self):
        bad = "dim = 2\nparams = a\nterm 1\n0 1\n0 0\n"
        with pytest.raises(ModelFileError, match="Hermitian"):
            parse_model_file(bad)

    def test_exponent_cap(self):
        bad = "dim = 1\nparams = a\nterm 99\n1\n"
        with pytest.raises(ModelFileError, match="cap"):
            parse_model_file(bad)

    def test_negative_exponent_rejected(self):
        bad = "dim = 1\nparams = a\nterm -1\n1\n"
        with pytest.raises(ModelFileError, match="non-negative"):
            parse_model_file(bad)

    def test_missing_headers(self):
        with pytest.raises(ModelFileError, match="dim"):
            parse_model_file("params = a\nterm 0\n1\n")

    @pytest.mark.parametrize(
        "token,value",
        [
            ("3", 3.0),
            ("-2.5", -2.5),
            ("i", 1j),
            ("-i", -1j),
            ("+i", 1j),
            ("2i", 2j),
            ("1+2i", 1 + 2j),
            ("1-2i", 1 - 2j),
            ("1.5e-3+2e1i", 1.5e-3 + 20j),
            ("1+i", 1 + 1j),
            (".5-.25i", 0.5 - 0.25j),
        ],
    )
    def test_complex_tokens(self, token, value):
        from adiaconn.models import _parse_complex

        assert _parse_complex(token, line=1) == value

    @pytest.mark.parametrize("token", ["foo", "1+", "--2", "1i2", "2+3"])
    def test_garbage_tokens(self, token):
        from adiaconn.models import _parse_complex

        with pytest.raises(ModelFileError, match="complex entry"):
            _parse_complex(token, line=7)

    def test_garbage_entry_in_file(self):
        with pytest.raises(ModelFileError, match="line 4"):
            parse_model_file("dim = 1\nparams = a\nterm 0\nfoo\n")
