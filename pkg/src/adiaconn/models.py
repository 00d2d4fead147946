"""Parametric Hamiltonian families H(lambda).

Provides the model abstraction (evaluation, parameter gradients, domain
checks), the two built-in families -- a spin in a magnetic field over
spherical parameters (B, theta, phi) and a generalized oscillator over
quadratic-form coefficients (X, Y, Z) in a truncated Fock basis -- and a
text model-file format for user-defined polynomial families
H(lambda) = sum_k c_k(lambda) M_k with monomial coefficients.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .operator_core import (
    DegenerateSpectrumError,
    HERMITICITY_TOL,
    PhaseConvention,
    DEFAULT_PHASE_CONVENTION,
    SpectralDecomposition,
    as_matrix,
    default_gap_tol,
    fix_phase,
    spectral_decompose,
)

__all__ = [
    "DomainViolationError",
    "ModelFileError",
    "ParametricHamiltonian",
    "Su2Model",
    "OscillatorModel",
    "ModelSpec",
    "constant_model",
    "angular_momentum",
    "spherical_axes",
    "ladder_operators",
    "parse_model_file",
    "serialize_model_spec",
    "FD_STEP_SCALE",
    "MAX_EXPONENT",
]

FD_STEP_SCALE = 1e-5
MAX_EXPONENT = 16


class DomainViolationError(Exception):
    """The parameter point lies outside the model's validity domain."""


class ModelFileError(Exception):
    """Model file failed to parse; carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ParametricHamiltonian:
    """A smooth family of Hermitian matrices over N real parameters.

    Subclasses (or the functional constructor) supply evaluation and,
    optionally, analytic gradients and a domain predicate.  When no
    analytic gradient is available, ``grad_h`` falls back to central
    finite differences with a per-direction step 1e-5 * (1 + |lambda_mu|).
    """

    def __init__(
        self,
        dim: int,
        n_params: int,
        eval_fn=None,
        grad_fn=None,
        domain_fn=None,
        param_names: tuple[str, ...] | None = None,
    ):
        self.dim = int(dim)
        self.n_params = int(n_params)
        self._eval_fn = eval_fn
        self._grad_fn = grad_fn
        self._domain_fn = domain_fn
        if param_names is None:
            param_names = tuple(f"lambda_{i + 1}" for i in range(n_params))
        if len(param_names) != n_params:
            raise ValueError("param_names length must match n_params")
        self.param_names = tuple(param_names)

    # -- hooks ------------------------------------------------------------

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        if self._eval_fn is None:
            raise NotImplementedError
        return self._eval_fn(lam)

    def _analytic_grad(self, lam: np.ndarray):
        if self._grad_fn is None:
            return None
        return self._grad_fn(lam)

    def domain_check(self, lam) -> bool:
        lam = self._as_point(lam)
        if self._domain_fn is None:
            return True
        return bool(self._domain_fn(lam))

    @property
    def has_analytic_grad(self) -> bool:
        return self._grad_fn is not None or type(self)._analytic_grad is not ParametricHamiltonian._analytic_grad

    # -- public API -------------------------------------------------------

    def _as_point(self, lam) -> np.ndarray:
        p = np.atleast_1d(np.asarray(lam, dtype=float))
        if p.shape != (self.n_params,):
            raise ValueError(
                f"expected {self.n_params} parameters {self.param_names}, got shape {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise ValueError("parameter point has non-finite entries")
        return p

    def eval_h(self, lam) -> np.ndarray:
        """Hermitian matrix H(lambda); raises DomainViolationError outside the domain."""
        lam = self._as_point(lam)
        if not self.domain_check(lam):
            raise DomainViolationError(
                f"{type(self).__name__}: point {lam.tolist()} outside model domain"
            )
        h = np.asarray(self._evaluate(lam), dtype=complex)
        return 0.5 * (h + h.conj().T)

    def grad_h(self, lam, scheme: str = "auto", step: float | None = None) -> list[np.ndarray]:
        """Parameter gradients dH/dlambda_mu as Hermitian matrices.

        scheme: "auto" uses analytic gradients when the model provides
        them, "analytic" demands them, "central" forces finite
        differences (optionally with an explicit ``step``).
        """
        lam = self._as_point(lam)
        if scheme not in ("auto", "analytic", "central"):
            raise ValueError(f"unknown gradient scheme {scheme!r}")
        if scheme in ("auto", "analytic"):
            grads = self._analytic_grad(lam)
            if grads is not None:
                return [0.5 * (g + g.conj().T) for g in map(np.asarray, grads)]
            if scheme == "analytic":
                raise ValueError("model provides no analytic gradient")
        return self._central_difference(lam, step)

    def _central_difference(self, lam: np.ndarray, step: float | None) -> list[np.ndarray]:
        grads = []
        for mu in range(self.n_params):
            h_mu = step if step is not None else FD_STEP_SCALE * (1.0 + abs(lam[mu]))
            e = np.zeros_like(lam)
            e[mu] = 1.0
            # One shrink is allowed when the stencil crosses the domain edge.
            for attempt in range(2):
                plus, minus = lam + h_mu * e, lam - h_mu * e
                if self.domain_check(plus) and self.domain_check(minus):
                    break
                h_mu *= 0.1
            else:
                raise DomainViolationError(
                    f"finite-difference stencil for {self.param_names[mu]} leaves the "
                    f"domain at {lam.tolist()} even after shrinking the step"
                )
            g = (self.eval_h(plus) - self.eval_h(minus)) / (2.0 * h_mu)
            grads.append(0.5 * (g + g.conj().T))
        return grads

    def spectral_at(
        self,
        lam,
        gap_tol: float | None = None,
        convention: PhaseConvention = DEFAULT_PHASE_CONVENTION,
    ) -> SpectralDecomposition:
        """Eigen-decomposition of H(lambda) with degeneracy detection."""
        return spectral_decompose(self.eval_h(lam), gap_tol=gap_tol, convention=convention)


def constant_model(matrix, n_params: int = 1) -> ParametricHamiltonian:
    """A parameter-independent family; every gradient is zero."""
    m = as_matrix(matrix)
    m = 0.5 * (m + m.conj().T)
    dim = m.shape[0]
    zeros = [np.zeros_like(m) for _ in range(n_params)]
    return ParametricHamiltonian(
        dim,
        n_params,
        eval_fn=lambda lam: m,
        grad_fn=lambda lam: zeros,
    )


# ---------------------------------------------------------------------------
# SU(2): spin in a magnetic field, spherical parameters (B, theta, phi)
# ---------------------------------------------------------------------------


def angular_momentum(l: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard spin-l matrices (Jx, Jy, Jz), basis ordered by ascending m."""
    twice = round(2 * l)
    if twice < 1 or abs(2 * l - twice) > 1e-12:
        raise ValueError(f"l must be a positive half-integer, got {l}")
    dim = twice + 1
    m = -l + np.arange(dim)
    jz = np.diag(m.astype(complex))
    # <m+1| J+ |m> = sqrt(l(l+1) - m(m+1)); ascending-m basis puts it one
    # row below the diagonal.
    raising = np.sqrt(l * (l + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.zeros((dim, dim), dtype=complex)
    jp[np.arange(1, dim), np.arange(dim - 1)] = raising
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    return jx, jy, jz


def spherical_axes(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal radial/polar/azimuthal unit vectors at (theta, phi)."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    n_hat = np.array([st * cp, st * sp, ct])
    theta_hat = np.array([ct * cp, ct * sp, -st])
    phi_hat = np.array([-sp, cp, 0.0])
    return n_hat, theta_hat, phi_hat


class Su2Model(ParametricHamiltonian):
    """Spin-l magnetic interaction H = B * mu * (J . n_hat(theta, phi)).

    Parameters are (B, theta, phi) in that order.  The spectrum is
    m * B * mu for m = -l..l, so it is non-degenerate whenever B > 0.
    theta may touch the coordinate poles 0 and pi; curvature maps should
    stay in the open interval since the phi chart degenerates there.
    """

    def __init__(self, l: float, mu: float = 1.0):
        jx, jy, jz = angular_momentum(l)
        super().__init__(dim=jx.shape[0], n_params=3, param_names=("B", "theta", "phi"))
        self.l = l
        self.mu = float(mu)
        self.j = (jx, jy, jz)

    def j_dot(self, direction: np.ndarray) -> np.ndarray:
        jx, jy, jz = self.j
        return direction[0] * jx + direction[1] * jy + direction[2] * jz

    def domain_check(self, lam) -> bool:
        b, theta, _ = self._as_point(lam)
        return b > 0.0 and -1e-12 <= theta <= np.pi + 1e-12

    def _evaluate(self, lam):
        b, theta, phi = lam
        n_hat, _, _ = spherical_axes(theta, phi)
        return b * self.mu * self.j_dot(n_hat)

    def _analytic_grad(self, lam):
        b, theta, phi = lam
        n_hat, theta_hat, phi_hat = spherical_axes(theta, phi)
        return [
            self.mu * self.j_dot(n_hat),
            b * self.mu * self.j_dot(theta_hat),
            b * self.mu * np.sin(theta) * self.j_dot(phi_hat),
        ]


# ---------------------------------------------------------------------------
# Generalized oscillator in a truncated Fock basis, parameters (X, Y, Z)
# ---------------------------------------------------------------------------


def ladder_operators(nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation/creation operators truncated to nmax Fock levels."""
    if nmax < 2:
        raise ValueError("need at least two Fock levels")
    a = np.diag(np.sqrt(np.arange(1, nmax)).astype(complex), 1)
    return a, a.conj().T


class OscillatorModel(ParametricHamiltonian):
    """Generalized oscillator H = (X q^2 + Y (pq + qp) + Z p^2) / 2.

    Bound states require Z*X - Y^2 > 0; the frequency is
    omega = sqrt(Z*X - Y^2) and the exact spectrum is omega * (n + 1/2).
    The family is realized on ``nmax`` Fock levels of the (q, p)
    reference oscillator, so only the lowest levels are faithful: results
    should be read on ``trust_levels = nmax - buffer`` levels at most, and
    :meth:`certified_levels` measures, per parameter point, how many
    levels actually meet an eigenvalue-drift tolerance.  Construction
    self-checks the canonical commutator and the drift at the reference
    point (1, 0, 1), where the truncation is exact.
    """

    def __init__(self, nmax: int = 60, buffer: int = 20):
        if buffer < 0 or buffer >= nmax:
            raise ValueError("buffer must satisfy 0 <= buffer < nmax")
        super().__init__(dim=nmax, n_params=3, param_names=("X", "Y", "Z"))
        self.nmax = nmax
        self.buffer = buffer
        self.trust_levels = nmax - buffer
        a, adag = ladder_operators(nmax)
        self.q = (a + adag) / np.sqrt(2.0)
        self.p = 1j * (adag - a) / np.sqrt(2.0)
        # Quadratics are truncations of the exact infinite-dimensional
        # matrices (a a^dag rewritten as a^dag a + 1 first); truncating the
        # operator products instead would plant a spurious corner eigenvalue
        # in the middle of the spectrum.
        a2 = a @ a
        adag2 = adag @ adag
        number_term = 2.0 * (adag @ a) + np.eye(nmax)
        self._q2 = 0.5 * (a2 + adag2 + number_term)
        self._p2 = 0.5 * (-a2 - adag2 + number_term)
        self._qp_pq = 1j * (adag2 - a2)
        self._startup_validation()

    def _startup_validation(self):
        comm = self.q @ self.p - self.p @ self.q
        block = comm[: self.nmax - 1, : self.nmax - 1]
        if np.linalg.norm(block - 1j * np.eye(self.nmax - 1), ord=np.inf) > 1e-10:
            raise AssertionError("truncated [q, p] deviates from i*I below the edge level")
        if self.certified_levels((1.0, 0.0, 1.0)) < self.trust_levels:
            raise AssertionError("eigenvalue drift at the reference point exceeds tolerance")

    def omega(self, lam) -> float:
        x, y, z = self._as_point(lam)
        disc = z * x - y * y
        if disc <= 0.0:
            raise DomainViolationError(
                f"unbound oscillator: Z*X - Y^2 = {disc:.6g} <= 0 at (X,Y,Z)={lam}"
            )
        return float(np.sqrt(disc))

    def domain_check(self, lam) -> bool:
        x, y, z = self._as_point(lam)
        return z * x - y * y > 0.0

    def _evaluate(self, lam):
        x, y, z = lam
        return 0.5 * (x * self._q2 + y * self._qp_pq + z * self._p2)

    def _analytic_grad(self, lam):
        return [0.5 * self._q2, 0.5 * self._qp_pq, 0.5 * self._p2]

    def certified_levels(self, lam, tol: float = 1e-8) -> int:
        """Largest count c <= trust_levels with |E_n - omega (n+1/2)| < tol for n < c.

        Truncation error grows with the squeezing between (q, p) and the
        normal mode at lambda, so the certified count depends on the point.
        """
        omega = self.omega(lam)
        evals = np.linalg.eigvalsh(self.eval_h(lam))
        exact = omega * (np.arange(self.nmax) + 0.5)
        drift = np.abs(evals - exact)
        bad = np.nonzero(drift >= tol)[0]
        first_bad = int(bad[0]) if bad.size else self.nmax
        return min(first_bad, self.trust_levels)

    def certified_vector_levels(self, lam, tail_tol: float = 1e-7) -> int:
        """Levels whose eigenvectors carry less than ``tail_tol`` amplitude
        in the top buffer//2 Fock rows.

        Eigenvalue drift certifies the spectrum but is quadratically
        insensitive to eigenvector pollution; matrix-element comparisons
        (connection, curvature entries) need this stricter vector-level
        certificate.
        """
        spec = self.spectral_at(lam)
        edge = max(self.buffer // 2, 1)
        tails = np.linalg.norm(spec.frame.matrix[-edge:, :], axis=0)
        bad = np.nonzero(tails >= tail_tol)[0]
        first_bad = int(bad[0]) if bad.size else self.nmax
        return min(first_bad, self.trust_levels)

    def spectral_at(
        self,
        lam,
        gap_tol: float | None = None,
        convention: PhaseConvention = DEFAULT_PHASE_CONVENTION,
    ) -> SpectralDecomposition:
        """Decompose with degeneracy checks restricted to the trusted levels.

        The artificial top of the truncated spectrum may cluster; gaps
        there are not meaningful and must not abort a computation whose
        conclusions are read off the trusted subspace.
        """
        h = self.eval_h(lam)
        evals, vecs = np.linalg.eigh(h)
        if gap_tol is None:
            gap_tol = default_gap_tol(evals)
        k = min(self.trust_levels + 1, self.nmax)
        gaps = np.diff(evals[:k])
        if gaps.size:
            worst = int(np.argmin(gaps))
            if gaps[worst] < gap_tol:
                raise DegenerateSpectrumError(worst, float(gaps[worst]), gap_tol)
        return SpectralDecomposition(
            eigenvalues=evals,
            frame=fix_phase(vecs, convention),
            min_gap=float(np.min(gaps)) if gaps.size else np.inf,
        )


# ---------------------------------------------------------------------------
# Model files: polynomial families from text
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """A validated polynomial family H(lambda) = sum_k monomial_k(lambda) M_k."""

    dim: int
    param_names: tuple[str, ...]
    terms: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def to_model(self) -> ParametricHamiltonian:
        def eval_fn(lam):
            h = np.zeros((self.dim, self.dim), dtype=complex)
            for exponents, matrix in self.terms:
                h += _monomial(lam, exponents) * matrix
            return h

        def grad_fn(lam):
            grads = [np.zeros((self.dim, self.dim), dtype=complex) for _ in range(self.n_params)]
            for exponents, matrix in self.terms:
                for mu, e_mu in enumerate(exponents):
                    if e_mu == 0:
                        continue
                    grads[mu] += _monomial_derivative(lam, exponents, mu) * matrix
            return grads

        return ParametricHamiltonian(
            self.dim,
            self.n_params,
            eval_fn=eval_fn,
            grad_fn=grad_fn,
            param_names=self.param_names,
        )


def _monomial(lam, exponents) -> float:
    out = 1.0
    for value, e in zip(lam, exponents):
        if e:
            out *= float(value) ** e
    return out


def _monomial_derivative(lam, exponents, mu) -> float:
    out = float(exponents[mu])
    for nu, (value, e) in enumerate(zip(lam, exponents)):
        e_eff = e - 1 if nu == mu else e
        if e_eff:
            out *= float(value) ** e_eff
    return out


_COMPLEX_RE = re.compile(
    r"^(?P<real>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"(?P<imag>[+-](?:\d+\.?\d*|\.\d+)?(?:[eE][+-]?\d+)?)?"
    r"(?P<unit>i)?$"
)


def _parse_complex(token: str, line: int) -> complex:
    m = _COMPLEX_RE.match(token)
    if not m:
        raise ModelFileError(line, f"cannot parse complex entry {token!r}")
    real_s, imag_s, unit = m.group("real"), m.group("imag"), m.group("unit")
    try:
        if unit is None:
            # purely real; a dangling sign group means garbage like "1+"
            if real_s is None or imag_s is not None:
                raise ValueError
            return complex(float(real_s), 0.0)
        if imag_s is None:
            # "i", "2i", "-1.5i": any sign/digits were captured as real_s
            return complex(0.0, 1.0 if real_s is None else float(real_s))
        if real_s is None:
            # "+i" / "-i"
            if imag_s not in ("+", "-"):
                raise ValueError
            return complex(0.0, float(imag_s + "1"))
        imag = float(imag_s + "1") if imag_s in ("+", "-") else float(imag_s)
        return complex(float(real_s), imag)
    except ValueError:
        raise ModelFileError(line, f"cannot parse complex entry {token!r}") from None


def _format_complex(z: complex) -> str:
    re_part, im_part = float(z.real), float(z.imag)
    if im_part == 0.0:
        return repr(re_part)
    if re_part == 0.0:
        return f"{im_part!r}i"
    sign = "+" if im_part >= 0 else "-"
    return f"{re_part!r}{sign}{abs(im_part)!r}i"


def parse_model_file(text: str) -> ModelSpec:
    """Parse the model-file grammar into a validated :class:`ModelSpec`.

    Format: header lines ``dim = <int>`` and ``params = <name> ...``, then
    repeated blocks ``term <e1> ... <eN>`` (non-negative monomial
    exponents) followed by dim rows of dim whitespace-separated complex
    entries written like ``1.5``, ``2i`` or ``0.5-0.25i``.  Lines starting
    with ``#`` are comments.  Every term matrix must be Hermitian.
    """
    lines = text.splitlines()
    dim: int | None = None
    names: tuple[str, ...] | None = None
    terms: list[tuple[tuple[int, ...], np.ndarray]] = []

    def content(idx):
        stripped = lines[idx].strip()
        return None if not stripped or stripped.startswith("#") else stripped

    i = 0
    n = len(lines)
    while i < n:
        line = content(i)
        if line is None:
            i += 1
            continue
        lineno = i + 1
        if line.startswith("dim"):
            parts = line.split("=")
            if dim is not None:
                raise ModelFileError(lineno, "duplicate dim header")
            if len(parts) != 2:
                raise ModelFileError(lineno, "expected 'dim = <int>'")
            try:
                dim = int(parts[1].strip())
            except ValueError:
                raise ModelFileError(lineno, f"bad dim value {parts[1].strip()!r}") from None
            if dim < 1:
                raise ModelFileError(lineno, "dim must be positive")
            i += 1
        elif line.startswith("params"):
            parts = line.split("=")
            if names is not None:
                raise ModelFileError(lineno, "duplicate params header")
            if len(parts) != 2 or not parts[1].split():
                raise ModelFileError(lineno, "expected 'params = <name1> <name2> ...'")
            names = tuple(parts[1].split())
            i += 1
        elif line.startswith("term"):
            if dim is None or names is None:
                raise ModelFileError(lineno, "term block before dim/params headers")
            tokens = line.split()[1:]
            if len(tokens) != len(names):
                raise ModelFileError(
                    lineno, f"term needs {len(names)} exponents, got {len(tokens)}"
                )
            try:
                exponents = tuple(int(t) for t in tokens)
            except ValueError:
                raise ModelFileError(lineno, "exponents must be integers") from None
            if any(e < 0 for e in exponents):
                raise ModelFileError(lineno, "exponents must be non-negative")
            if any(e > MAX_EXPONENT for e in exponents):
                raise ModelFileError(lineno, f"exponent exceeds the cap {MAX_EXPONENT}")
            i += 1
            rows = []
            while len(rows) < dim:
                while i < n and content(i) is None:
                    i += 1
                if i >= n:
                    raise ModelFileError(n, f"term matrix truncated: need {dim} rows")
                row_line = content(i)
                if row_line.startswith(("term", "dim", "params")):
                    raise ModelFileError(i + 1, f"term matrix truncated: need {dim} rows")
                entries = row_line.split()
                if len(entries) != dim:
                    raise ModelFileError(i + 1, f"row needs {dim} entries, got {len(entries)}")
                rows.append([_parse_complex(tok, i + 1) for tok in entries])
                i += 1
            matrix = np.array(rows, dtype=complex)
            scale = max(np.linalg.norm(matrix), 1.0)
            if np.linalg.norm(matrix - matrix.conj().T) > HERMITICITY_TOL * scale:
                raise ModelFileError(lineno, "term matrix is not Hermitian")
            matrix.setflags(write=False)
            terms.append((exponents, matrix))
        else:
            raise ModelFileError(lineno, f"unrecognized line {line!r}")

    if dim is None:
        raise ModelFileError(1, "missing 'dim = <int>' header")
    if names is None:
        raise ModelFileError(1, "missing 'params = ...' header")
    if not terms:
        raise ModelFileError(len(lines) or 1, "model defines no terms")
    return ModelSpec(dim=dim, param_names=names, terms=tuple(terms))


def serialize_model_spec(spec: ModelSpec) -> str:
    """Write a ModelSpec back to text; parse(serialize(s)) reproduces s."""
    out = [f"dim = {spec.dim}", "params = " + " ".join(spec.param_names), ""]
    for exponents, matrix in spec.terms:
        out.append("term " + " ".join(str(e) for e in exponents))
        for row in matrix:
            out.append(" ".join(_format_complex(z) for z in row))
        out.append("")
    return "\n".join(out)
