"""Dense complex linear algebra substrate.

Hermitian and unitary matrix values with certified structure, spectral
decomposition with degeneracy detection, Hermitian matrix exponentials, and
a deterministic eigenvector phase convention.  Everything here is a pure
function on immutable values; nothing mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-10

__all__ = [
    "HERMITICITY_TOL",
    "UNITARITY_TOL",
    "DegenerateSpectrumError",
    "HermitianOperator",
    "UnitaryOperator",
    "SpectralDecomposition",
    "PhaseConvention",
    "as_matrix",
    "frobenius",
    "wrap_phase",
    "hermitize",
    "spectral_decompose",
    "default_gap_tol",
    "expm_hermitian",
    "expm_hermitian_derivative",
    "fix_phase",
]


class DegenerateSpectrumError(Exception):
    """Adjacent eigenvalue spacing fell below the requested gap tolerance."""

    def __init__(self, level: int, gap: float, gap_tol: float):
        self.level = level
        self.gap = gap
        self.gap_tol = gap_tol
        super().__init__(
            f"eigenvalues {level} and {level + 1} are degenerate within "
            f"tolerance: gap {gap:.3e} < gap_tol {gap_tol:.3e}"
        )


def as_matrix(value) -> np.ndarray:
    """Accept a raw ndarray or one of the operator wrappers below."""
    m = getattr(value, "matrix", value)
    return np.asarray(m, dtype=complex)


def frobenius(m) -> float:
    return float(np.linalg.norm(as_matrix(m)))


def wrap_phase(phi):
    """Wrap angle(s) to (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(phi)))


def _check_square_finite(m: np.ndarray, what: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError(f"{what} has non-finite entries")


@dataclass(frozen=True)
class HermitianOperator:
    """A certified Hermitian matrix.

    ``asymmetry`` records the relative anti-Hermitian content of the matrix
    this value was symmetrized from (0 for inputs that were already
    Hermitian to working precision).
    """

    matrix: np.ndarray
    asymmetry: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        _check_square_finite(m, "HermitianOperator")
        scale = max(np.linalg.norm(m), 1.0)
        if np.linalg.norm(m - m.conj().T) > HERMITICITY_TOL * scale:
            raise ValueError("matrix is not Hermitian within tolerance")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def was_asymmetric(self) -> bool:
        return self.asymmetry > HERMITICITY_TOL


@dataclass(frozen=True)
class UnitaryOperator:
    """A certified unitary matrix (columns orthonormal within tolerance).

    ``tol`` is the per-dimension unitarity budget; ordered products of
    many factors accumulate roundoff and are certified against a looser
    budget by their producers.
    """

    matrix: np.ndarray
    tol: float = UNITARITY_TOL

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        _check_square_finite(m, "UnitaryOperator")
        defect = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
        if defect > self.tol * m.shape[0]:
            raise ValueError(f"matrix is not unitary: ||U^dag U - I|| = {defect:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class PhaseConvention:
    """Deterministic rule fixing the free unit phase of each eigenvector.

    ``largest-real-positive`` multiplies each column by a unit phase that
    makes its largest-magnitude component real and positive;
    ``first-nonzero-real-positive`` does the same with the first component
    above a small floor.  Both are idempotent.  Ties break to the lowest
    index.
    """

    rule: str = "largest-real-positive"
    tie_break: str = "lowest-index"

    _RULES = ("largest-real-positive", "first-nonzero-real-positive")

    def __post_init__(self):
        if self.rule not in self._RULES:
            raise ValueError(f"unknown phase rule {self.rule!r}; choose from {self._RULES}")
        if self.tie_break != "lowest-index":
            raise ValueError("only lowest-index tie breaking is supported")

    def anchor_index(self, column: np.ndarray) -> int:
        mags = np.abs(column)
        if self.rule == "largest-real-positive":
            return int(np.argmax(mags))
        floor = 1e-12 * max(float(mags.max()), 1e-300)
        nonzero = np.nonzero(mags > floor)[0]
        if nonzero.size == 0:
            raise ValueError("cannot phase-fix a zero column")
        return int(nonzero[0])


DEFAULT_PHASE_CONVENTION = PhaseConvention()


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues with a phase-fixed orthonormal eigenframe.

    ``frame.matrix[:, n]`` is the eigenvector of level ``n``; ``min_gap`` is
    the smallest spacing between adjacent eigenvalues (``inf`` for dim 1).
    """

    eigenvalues: np.ndarray
    frame: UnitaryOperator
    min_gap: float

    def __post_init__(self):
        e = np.asarray(self.eigenvalues, dtype=float)
        e.setflags(write=False)
        object.__setattr__(self, "eigenvalues", e)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def to_eigenbasis(self, m) -> np.ndarray:
        """Matrix elements of ``m`` between eigenvectors, ``<m|M|n>``."""
        v = self.frame.matrix
        return v.conj().T @ as_matrix(m) @ v

    def from_eigenbasis(self, m) -> np.ndarray:
        v = self.frame.matrix
        return v @ as_matrix(m) @ v.conj().T


def hermitize(m, tol: float = HERMITICITY_TOL) -> HermitianOperator:
    """Symmetrize a square matrix to (M + M^dag)/2.

    The relative size of the discarded anti-Hermitian part is recorded on
    the result; it exceeding ``tol`` flags the input as materially
    non-Hermitian rather than raising.
    """
    m = as_matrix(m)
    _check_square_finite(m, "hermitize input")
    sym = 0.5 * (m + m.conj().T)
    scale = np.linalg.norm(m)
    asym = np.linalg.norm(m - m.conj().T) / scale if scale > 0 else 0.0
    return HermitianOperator(sym, asymmetry=float(asym))


def default_gap_tol(eigenvalues: np.ndarray) -> float:
    """Scale-aware degeneracy threshold: 1e-8 * (1 + spectral radius)."""
    radius = float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 0.0
    return 1e-8 * (1.0 + radius)


def fix_phase(frame, convention: PhaseConvention = DEFAULT_PHASE_CONVENTION) -> UnitaryOperator:
    """Apply the phase convention column by column.  Idempotent."""
    v = as_matrix(frame).copy()
    for n in range(v.shape[1]):
        col = v[:, n]
        norm = np.linalg.norm(col)
        if norm == 0.0:
            raise ValueError(f"column {n} is zero; cannot phase-fix")
        k = convention.anchor_index(col)
        z = col[k]
        if abs(z) == 0.0:
            raise ValueError(f"column {n} anchor entry is zero; cannot phase-fix")
        v[:, n] = col * (z.conjugate() / abs(z))
    return UnitaryOperator(v)


def spectral_decompose(
    h,
    gap_tol: float | None = None,
    convention: PhaseConvention = DEFAULT_PHASE_CONVENTION,
) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix with degeneracy detection.

    Raises :class:`DegenerateSpectrumError` when any adjacent gap falls
    below ``gap_tol`` (default: scale-aware, see :func:`default_gap_tol`);
    a degenerate spectrum invalidates every construction downstream that
    divides by eigenvalue differences.
    """
    m = as_matrix(h)
    _check_square_finite(m, "spectral_decompose input")
    scale = max(np.linalg.norm(m), 1.0)
    if np.linalg.norm(m - m.conj().T) > HERMITICITY_TOL * scale:
        raise ValueError("spectral_decompose requires a Hermitian matrix")
    evals, vecs = np.linalg.eigh(m)
    if gap_tol is None:
        gap_tol = default_gap_tol(evals)
    if len(evals) > 1:
        gaps = np.diff(evals)
        k = int(np.argmin(gaps))
        min_gap = float(gaps[k])
        if min_gap < gap_tol:
            raise DegenerateSpectrumError(k, min_gap, gap_tol)
    else:
        min_gap = np.inf
    return SpectralDecomposition(
        eigenvalues=evals,
        frame=fix_phase(vecs, convention),
        min_gap=min_gap,
    )


def expm_hermitian(h, s: float = 1.0) -> UnitaryOperator:
    """exp(i s H) for Hermitian H, evaluated through the eigenbasis."""
    m = as_matrix(h)
    evals, vecs = np.linalg.eigh(m)
    phases = np.exp(1j * s * evals)
    return UnitaryOperator((vecs * phases) @ vecs.conj().T)


def expm_hermitian_derivative(h, dh, s: float = 1.0) -> np.ndarray:
    """Directional derivative of H -> exp(i s H) along the Hermitian dH.

    Exact first-order variation via the eigenbasis divided-difference
    kernel: between eigenvectors m, n of H,

        <m| d exp(isH) |n> = <m|dH|n> * (e^{isE_m} - e^{isE_n})/(E_m - E_n)

    with the diagonal limit i s e^{isE_n} <n|dH|n>.  The denominator never
    carries an extra i, which is fixed by the small-s limit
    d exp(isH) -> i s dH.
    """
    m = as_matrix(h)
    evals, vecs = np.linalg.eigh(m)
    g = vecs.conj().T @ as_matrix(dh) @ vecs
    e = np.exp(1j * s * evals)
    delta = evals[:, None] - evals[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = (e[:, None] - e[None, :]) / delta
    np.fill_diagonal(kernel, 1j * s * e)
    return vecs @ (g * kernel) @ vecs.conj().T
