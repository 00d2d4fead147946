"""Adiabatic connection and shift operator at a parameter point.

Two independent routes to the connection are provided: the spectral
sum-over-states formula (exact, given an eigen-decomposition) and a
finite-horizon time average of the Maurer-Cartan 1-form of the unitary
group generated by the instantaneous Hamiltonian, which converges to the
spectral result as the horizon grows.  Gauge transformations of the
connection are also implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operator_core import SpectralDecomposition, as_matrix, hermitize
from .models import ParametricHamiltonian

__all__ = [
    "ConnectionOneForm",
    "ShiftOperator",
    "TimeAverageConfig",
    "connection_spectral",
    "connection_spectral_at",
    "shift_operator",
    "maurer_cartan_sample",
    "connection_time_average",
    "gauge_transform",
]


@dataclass(frozen=True)
class ConnectionOneForm:
    """Per-direction Hermitian connection components A_mu at a base point.

    In the eigenbasis of H(base_point) every component has zero diagonal:
    the connection only rotates eigenvectors into one another, never
    rephases one against itself.
    """

    components: tuple[np.ndarray, ...]
    base_point: np.ndarray | None = None
    error_estimate: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(np.asarray(c) for c in self.components))
        if self.base_point is not None:
            object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))

    @property
    def n_params(self) -> int:
        return len(self.components)

    def along(self, delta) -> np.ndarray:
        """Contract the 1-form with a parameter displacement: sum_mu A_mu dlambda_mu."""
        delta = np.asarray(delta, dtype=float)
        gen = np.zeros_like(self.components[0])
        for a_mu, d_mu in zip(self.components, delta):
            if d_mu != 0.0:
                gen = gen + d_mu * a_mu
        return gen


@dataclass(frozen=True)
class ShiftOperator:
    """Diagonal-in-eigenbasis components D_mu; first-order level shifts.

    Each D_mu commutes with H(base_point) and <n|D_mu|n> is the first
    derivative of E_n along lambda_mu.
    """

    components: tuple[np.ndarray, ...]
    base_point: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(np.asarray(c) for c in self.components))
        if self.base_point is not None:
            object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))

    def level_shifts(self, spec: SpectralDecomposition) -> np.ndarray:
        """dE_n/dlambda_mu as an (n_levels, n_params) real array."""
        return np.column_stack(
            [np.real(np.diag(spec.to_eigenbasis(d))) for d in self.components]
        )


def connection_spectral(
    spec: SpectralDecomposition, grad_h: list[np.ndarray]
) -> ConnectionOneForm:
    """Sum-over-states connection components.

    A_mu = i * sum_{m != n} |m><m| dH/dlambda_mu |n><n| / (E_m - E_n),
    assembled in the eigenbasis and rotated back.  Requires a
    non-degenerate decomposition.
    """
    if spec.dim > 1 and spec.min_gap <= 0.0:
        raise ValueError("connection_spectral requires a non-degenerate spectrum")
    delta = spec.eigenvalues[:, None] - spec.eigenvalues[None, :]
    inv = np.zeros_like(delta)
    mask = delta != 0.0
    inv[mask] = 1.0 / delta[mask]
    np.fill_diagonal(inv, 0.0)
    components = []
    for g in grad_h:
        g_eig = spec.to_eigenbasis(g)
        a_eig = 1j * g_eig * inv
        components.append(spec.from_eigenbasis(a_eig))
    return ConnectionOneForm(tuple(components))


def connection_spectral_at(
    model: ParametricHamiltonian, lam, gap_tol: float | None = None
) -> tuple[ConnectionOneForm, SpectralDecomposition]:
    """Connection of a model at a point, tagged with the point itself."""
    lam = np.asarray(lam, dtype=float)
    spec = model.spectral_at(lam, gap_tol=gap_tol)
    grads = model.grad_h(lam)
    a = connection_spectral(spec, grads)
    return ConnectionOneForm(a.components, base_point=lam), spec


def shift_operator(spec: SpectralDecomposition, grad_h: list[np.ndarray]) -> ShiftOperator:
    """D_mu = sum_n <n|dH/dlambda_mu|n> |n><n|: the part of dH commuting with H."""
    components = []
    for g in grad_h:
        diag = np.real(np.diag(spec.to_eigenbasis(g)))
        components.append(spec.from_eigenbasis(np.diag(diag.astype(complex))))
    return ShiftOperator(tuple(components))


@dataclass(frozen=True)
class TimeAverageConfig:
    """Finite-horizon trapezoid average over t in [-T, T].

    The sample spacing must resolve the fastest transition frequency of
    the spectrum; the guard refuses spacings above pi / (4 * spectral
    radius).
    """

    horizon: float
    samples: int
    quadrature: str = "uniform-trapezoid"

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("averaging horizon must be positive")
        if self.samples < 2:
            raise ValueError("need at least two time samples")
        if self.quadrature != "uniform-trapezoid":
            raise ValueError("only uniform-trapezoid quadrature is implemented")

    @property
    def spacing(self) -> float:
        return 2.0 * self.horizon / (self.samples - 1)

    def grid(self) -> np.ndarray:
        return np.linspace(-self.horizon, self.horizon, self.samples)

    @classmethod
    def for_spectrum(cls, spec: SpectralDecomposition, horizon: float | None = None):
        """Defaults: T = 50/min_gap, spacing = pi/(8 * spectral radius)."""
        if horizon is None:
            horizon = 50.0 / spec.min_gap
        radius = max(spec.spectral_radius, 1e-12)
        spacing = np.pi / (8.0 * radius)
        samples = max(int(np.ceil(2.0 * horizon / spacing)) + 1, 2)
        return cls(horizon=float(horizon), samples=samples)


def maurer_cartan_sample(model: ParametricHamiltonian, lam, t: float) -> list[np.ndarray]:
    """Components omega_mu(lambda, t) = i e^{-itH} d/dlambda_mu e^{itH}.

    Evaluated exactly through the eigenbasis: off-diagonal elements are
    i <m|dH|n> (1 - e^{-it(E_m - E_n)})/(E_m - E_n) and the diagonal is
    -t <n|dH|n>.  All components vanish at t = 0 and are Hermitian.
    """
    lam = np.asarray(lam, dtype=float)
    spec = model.spectral_at(lam)
    grads = model.grad_h(lam)
    delta = spec.eigenvalues[:, None] - spec.eigenvalues[None, :]
    off = np.exp(-1j * t * delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = 1j * (1.0 - off) / np.where(delta == 0.0, 1.0, delta)
    np.fill_diagonal(kernel, 0.0)
    out = []
    for g in grads:
        g_eig = spec.to_eigenbasis(g)
        w = g_eig * kernel
        np.fill_diagonal(w, -t * np.real(np.diag(g_eig)))
        out.append(spec.from_eigenbasis(w))
    return out


def connection_time_average(
    model: ParametricHamiltonian,
    lam,
    cfg: TimeAverageConfig | None = None,
) -> ConnectionOneForm:
    """Estimate the connection as the trapezoid time average of the
    Maurer-Cartan form over [-T, T].

    The estimate carries a recorded error bound of the form C/T from the
    residual oscillatory terms; it converges to
    :func:`connection_spectral` as T grows.
    """
    lam = np.asarray(lam, dtype=float)
    spec = model.spectral_at(lam)
    grads = model.grad_h(lam)
    if cfg is None:
        cfg = TimeAverageConfig.for_spectrum(spec)
    nyquist = np.pi / (4.0 * max(spec.spectral_radius, 1e-12))
    if cfg.spacing >= nyquist:
        raise ValueError(
            f"sample spacing {cfg.spacing:.3e} too coarse for spectral radius "
            f"{spec.spectral_radius:.3e}; need below {nyquist:.3e}"
        )
    t = cfg.grid()
    weights = np.full(t.shape, cfg.spacing)
    weights[0] = weights[-1] = 0.5 * cfg.spacing
    weights /= weights.sum()
    delta = spec.eigenvalues[:, None] - spec.eigenvalues[None, :]
    # trapezoid means of e^{-it delta} and of t over the grid
    mean_osc = np.einsum("k,kmn->mn", weights, np.exp(-1j * t[:, None, None] * delta[None, :, :]))
    mean_t = float(weights @ t)
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = 1j * (1.0 - mean_osc) / np.where(delta == 0.0, 1.0, delta)
    np.fill_diagonal(kernel, 0.0)
    components = []
    bound = 0.0
    for g in grads:
        g_eig = spec.to_eigenbasis(g)
        a_eig = g_eig * kernel
        np.fill_diagonal(a_eig, -mean_t * np.real(np.diag(g_eig)))
        components.append(spec.from_eigenbasis(a_eig))
        off = np.abs(g_eig[delta != 0.0] / delta[delta != 0.0] ** 2)
        if off.size:
            # leading 1/T envelope, doubled to absorb quadrature inflation
            bound = max(bound, 2.0 * float(np.max(off)) / cfg.horizon)
    return ConnectionOneForm(tuple(components), base_point=lam, error_estimate=bound)


def gauge_transform(a: ConnectionOneForm, u, du: list[np.ndarray]) -> ConnectionOneForm:
    """Transform the connection under H -> U H U^dag.

    A'_mu = U A_mu U^dag + i U (dU/dlambda_mu)^dag, symmetrized to kill
    numerical anti-Hermitian residue (i U dU^dag is Hermitian exactly when
    d(U U^dag) = 0).  The result is a valid connection for the rotated
    family up to a term diagonal in the rotated eigenbasis, which only
    rephases eigenvectors.
    """
    u = as_matrix(u)
    defect = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
    if defect > 1e-8 * u.shape[0]:
        raise ValueError(f"gauge matrix is not unitary: defect {defect:.3e}")
    if len(du) != a.n_params:
        raise ValueError("need one dU component per parameter direction")
    components = []
    for a_mu, du_mu in zip(a.components, du):
        raw = u @ a_mu @ u.conj().T + 1j * u @ as_matrix(du_mu).conj().T
        components.append(hermitize(raw).matrix)
    return ConnectionOneForm(tuple(components), base_point=a.base_point)
