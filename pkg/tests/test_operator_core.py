import numpy as np
import pytest

from adiaconn.operator_core import (
    DegenerateSpectrumError,
    PhaseConvention,
    expm_hermitian,
    expm_hermitian_derivative,
    fix_phase,
    hermitize,
    spectral_decompose,
    wrap_phase,
)

from conftest import random_hermitian

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


class TestHermitize:
    def test_hermitian_input_unchanged(self):
        m = np.array([[1.0, 1j], [-1j, 2.0]])
        out = hermitize(m)
        assert np.allclose(out.matrix, m)
        assert not out.was_asymmetric

    def test_symmetrization(self):
        out = hermitize(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert np.allclose(out.matrix, [[0.0, 0.5], [0.5, 0.0]])
        assert out.was_asymmetric

    def test_output_exactly_hermitian(self, rng):
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        out = hermitize(m).matrix
        assert np.array_equal(out, out.conj().T)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            hermitize(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            hermitize(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestSpectralDecompose:
    def test_diagonal(self):
        spec = spectral_decompose(np.diag([1.0, 2.0]).astype(complex))
        assert np.allclose(spec.eigenvalues, [1.0, 2.0])
        assert np.allclose(spec.frame.matrix, np.eye(2))

    def test_pauli_x(self):
        spec = spectral_decompose(0.5 * SX)
        assert np.allclose(spec.eigenvalues, [-0.5, 0.5])
        assert spec.min_gap == pytest.approx(1.0)

    def test_gap_threshold_raises(self):
        with pytest.raises(DegenerateSpectrumError) as err:
            spectral_decompose(0.5 * SZ, gap_tol=2.0)
        assert err.value.gap == pytest.approx(1.0)
        assert err.value.level == 0

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            spectral_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))

    @pytest.mark.parametrize("dim", [2, 4, 7])
    def test_reassembly(self, rng, dim):
        h = random_hermitian(rng, dim)
        spec = spectral_decompose(h)
        v = spec.frame.matrix
        rebuilt = v @ np.diag(spec.eigenvalues) @ v.conj().T
        assert np.linalg.norm(rebuilt - h) <= 1e-12 * np.linalg.norm(h) * dim

    def test_eigenvalues_ascending(self, rng):
        spec = spectral_decompose(random_hermitian(rng, 6))
        assert np.all(np.diff(spec.eigenvalues) > 0)

    def test_single_level(self):
        spec = spectral_decompose(np.array([[2.0]], dtype=complex))
        assert spec.min_gap == np.inf


class TestExpm:
    def test_zero_time_is_identity(self, rng):
        h = random_hermitian(rng, 4)
        assert np.allclose(expm_hermitian(h, 0.0).matrix, np.eye(4))

    def test_pauli_y_half_turn(self):
        # closed form cos(s/2) I + i sin(s/2) sigma_y at s = pi
        u = expm_hermitian(0.5 * SY, np.pi).matrix
        assert np.allclose(u, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-14)

    def test_group_inverse(self, rng):
        h = random_hermitian(rng, 5)
        s = 0.73
        prod = expm_hermitian(h, s).matrix @ expm_hermitian(h, -s).matrix
        assert np.linalg.norm(prod - np.eye(5)) < 1e-12

    @pytest.mark.parametrize("s,t", [(0.3, 1.1), (-2.0, 0.7)])
    def test_one_parameter_group(self, rng, s, t):
        h = random_hermitian(rng, 4)
        lhs = expm_hermitian(h, s).matrix @ expm_hermitian(h, t).matrix
        rhs = expm_hermitian(h, s + t).matrix
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * 4


class TestExpmDerivative:
    def test_small_s_limit(self, rng):
        h = random_hermitian(rng, 3)
        dh = random_hermitian(rng, 3)
        s = 1e-7
        d = expm_hermitian_derivative(h, dh, s)
        assert np.linalg.norm(d - 1j * s * dh) < 1e-12

    def test_matches_finite_difference(self, rng):
        h = random_hermitian(rng, 4)
        dh = random_hermitian(rng, 4)
        s = 0.9
        eps = 1e-6
        fd = (
            expm_hermitian(h + eps * dh, s).matrix
            - expm_hermitian(h - eps * dh, s).matrix
        ) / (2 * eps)
        assert np.linalg.norm(expm_hermitian_derivative(h, dh, s) - fd) < 1e-8


class TestFixPhase:
    def test_pure_imaginary_column(self):
        frame = np.array([[0.0, 1.0], [1j, 0.0]])
        fixed = fix_phase(frame).matrix
        assert np.allclose(fixed[:, 0], [0.0, 1.0])

    def test_tie_breaks_to_lowest_index(self):
        col = np.exp(1j * np.pi / 3) * np.array([1.0, 1.0]) / np.sqrt(2)
        frame = np.column_stack([col, np.exp(1j * np.pi / 3) * np.array([1.0, -1.0]) / np.sqrt(2)])
        fixed = fix_phase(frame).matrix
        assert np.allclose(fixed[:, 0], np.array([1.0, 1.0]) / np.sqrt(2))
        # anchor is index 0 for the second column as well
        assert fixed[0, 1].imag == pytest.approx(0.0, abs=1e-15)
        assert fixed[0, 1].real > 0

    def test_idempotent_on_random_unitaries(self, rng):
        for _ in range(5):
            u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
            once = fix_phase(u).matrix
            twice = fix_phase(once).matrix
            assert np.allclose(once, twice, atol=1e-14)

    def test_preserves_physical_content(self, rng):
        u = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
        fixed = fix_phase(u).matrix
        overlaps = np.abs(np.einsum("in,in->n", u.conj(), fixed))
        assert np.allclose(overlaps, 1.0, atol=1e-12)

    def test_zero_column_rejected(self):
        frame = np.zeros((2, 2), dtype=complex)
        with pytest.raises(ValueError, match="zero"):
            fix_phase(frame)

    def test_alternative_convention_is_idempotent(self, rng):
        conv = PhaseConvention(rule="first-nonzero-real-positive")
        u = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
        once = fix_phase(u, conv).matrix
        assert np.allclose(once, fix_phase(once, conv).matrix, atol=1e-14)

    def test_unknown_rule_rejected(self):
        with pytest.raises(ValueError, match="unknown phase rule"):
            PhaseConvention(rule="whatever")


def test_wrap_phase_range():
    angles = np.array([-4 * np.pi + 0.1, -np.pi, 0.0, np.pi, 5.5 * np.pi])
    wrapped = wrap_phase(angles)
    assert np.all(wrapped > -np.pi - 1e-15)
    assert np.all(wrapped <= np.pi + 1e-15)
    assert wrap_phase(np.pi) == pytest.approx(np.pi)
    assert wrap_phase(3 * np.pi) == pytest.approx(np.pi)
