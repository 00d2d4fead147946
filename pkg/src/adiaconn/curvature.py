"""Curvature of the adiabatic connection.

The non-Abelian field strength F_mu_nu = dA_nu/dmu - dA_mu/dnu
- i [A_mu, A_nu] is, for this connection, diagonal in the instantaneous
eigenbasis; its diagonal entries are the per-level Berry curvatures, whose
surface integrals are Berry phases.  This module computes the field
strength by central differences of the spectral connection, the per-level
curvature table by the exact sum-over-states formula, the diagonality
residual, the small-loop holonomy consistency check, and pulled-back
surface integrals over parametrized patches.

Sign and factor conventions are pinned by the spin-1/2 anchor: stored
components satisfy F_theta_phi = -sin(theta) J_n, so the per-level value
is W^(m) = -m sin(theta) and the phase of a loop is the plain double
integral of W over the enclosed patch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operator_core import (
    DegenerateSpectrumError,
    SpectralDecomposition,
    default_gap_tol,
    expm_hermitian,
    frobenius,
    hermitize,
)
from .models import DomainViolationError, ParametricHamiltonian
from .connection import connection_spectral
from .transport import PathSpec, holonomy

__all__ = [
    "CurvatureTwoForm",
    "BerryCurvatureTable",
    "SurfacePatch",
    "GridTooCoarseError",
    "yang_mills_curvature",
    "berry_curvature_levels",
    "berry_curvature_at",
    "diagonality_residual",
    "small_loop_check",
    "SmallLoopReport",
    "berry_phase_surface",
]

CURVATURE_FD_SCALE = 1e-5


class GridTooCoarseError(Exception):
    """Surface grid failed the doubling self-consistency estimate."""


@dataclass(frozen=True)
class CurvatureTwoForm:
    """Hermitian components F_mu_nu stored for mu < nu at a base point."""

    components: dict
    base_point: np.ndarray
    n_params: int

    def component(self, mu: int, nu: int) -> np.ndarray:
        """F_mu_nu with antisymmetry applied for reversed index order."""
        if mu == nu:
            some = next(iter(self.components.values()))
            return np.zeros_like(some)
        if (mu, nu) in self.components:
            return self.components[(mu, nu)]
        return -self.components[(nu, mu)]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.components.keys())


@dataclass(frozen=True)
class BerryCurvatureTable:
    """Real per-level curvature values W^(n)_mu_nu at a base point.

    ``table[n, k]`` corresponds to ``pairs[k]``; the value for a reversed
    index pair flips sign.
    """

    pairs: tuple[tuple[int, int], ...]
    table: np.ndarray
    base_point: np.ndarray | None = None

    def value(self, n: int, mu: int, nu: int) -> float:
        if mu == nu:
            return 0.0
        if (mu, nu) in self.pairs:
            return float(self.table[n, self.pairs.index((mu, nu))])
        return -float(self.table[n, self.pairs.index((nu, mu))])


def yang_mills_curvature(
    model: ParametricHamiltonian,
    lam,
    step: float | None = None,
    gap_tol: float | None = None,
) -> CurvatureTwoForm:
    """Field strength at a point by central differences of the connection.

    The derivative terms use a two-sided stencil of half-width
    ``step`` (default 1e-5 * (1 + |lambda_mu|) per direction); the
    commutator term is exact.  Degeneracy anywhere inside the stencil
    propagates as an error.
    """
    lam = np.asarray(lam, dtype=float)
    n = model.n_params

    def connection_at(point):
        spec = model.spectral_at(point, gap_tol=gap_tol)
        return connection_spectral(spec, model.grad_h(point)).components

    a_center = connection_at(lam)
    derivs = []  # derivs[mu][nu] = dA_nu / dlambda_mu
    for mu in range(n):
        h_mu = step if step is not None else CURVATURE_FD_SCALE * (1.0 + abs(lam[mu]))
        e = np.zeros(n)
        e[mu] = 1.0
        plus, minus = lam + h_mu * e, lam - h_mu * e
        if not (model.domain_check(plus) and model.domain_check(minus)):
            raise DomainViolationError(
                f"curvature stencil leaves the domain at {lam.tolist()} along "
                f"{model.param_names[mu]}"
            )
        a_plus, a_minus = connection_at(plus), connection_at(minus)
        derivs.append([(p - m) / (2.0 * h_mu) for p, m in zip(a_plus, a_minus)])

    components = {}
    for mu in range(n):
        for nu in range(mu + 1, n):
            comm = a_center[mu] @ a_center[nu] - a_center[nu] @ a_center[mu]
            f = derivs[mu][nu] - derivs[nu][mu] - 1j * comm
            components[(mu, nu)] = hermitize(f).matrix
    return CurvatureTwoForm(components=components, base_point=lam, n_params=n)


def berry_curvature_levels(
    spec: SpectralDecomposition, grad_h: list[np.ndarray]
) -> BerryCurvatureTable:
    """Exact per-level curvature by the sum-over-states formula.

    W^(n)_mu_nu = -2 sum_{n' != n} Im(<n|dH_mu|n'><n'|dH_nu|n>)
                  / (E_n - E_{n'})^2,

    which equals the diagonal entry <n|F_mu_nu|n> of the field strength.
    """
    n_params = len(grad_h)
    delta = spec.eigenvalues[:, None] - spec.eigenvalues[None, :]
    inv2 = np.zeros_like(delta)
    mask = delta != 0.0
    inv2[mask] = 1.0 / delta[mask] ** 2
    np.fill_diagonal(inv2, 0.0)
    g_eig = [spec.to_eigenbasis(g) for g in grad_h]
    pairs = []
    columns = []
    for mu in range(n_params):
        for nu in range(mu + 1, n_params):
            prod = g_eig[mu] * g_eig[nu].T  # [n, n'] = <n|dHmu|n'><n'|dHnu|n>
            w = -2.0 * np.sum(np.imag(prod) * inv2, axis=1)
            pairs.append((mu, nu))
            columns.append(w)
    table = np.column_stack(columns) if columns else np.zeros((spec.dim, 0))
    return BerryCurvatureTable(pairs=tuple(pairs), table=table)


def berry_curvature_at(
    model: ParametricHamiltonian, lam, gap_tol: float | None = None
) -> BerryCurvatureTable:
    lam = np.asarray(lam, dtype=float)
    spec = model.spectral_at(lam, gap_tol=gap_tol)
    out = berry_curvature_levels(spec, model.grad_h(lam))
    return BerryCurvatureTable(pairs=out.pairs, table=out.table, base_point=lam)


def diagonality_residual(
    f: CurvatureTwoForm, spec: SpectralDecomposition, levels: int | None = None
) -> float:
    """Largest off-diagonal magnitude of any component in the eigenbasis,
    relative to the largest component Frobenius norm (0/0 counts as 0).

    Normalizing against the overall field-strength scale rather than each
    component separately keeps identically-vanishing components (pure
    finite-difference noise) from polluting the ratio.  ``levels``
    restricts the check to the leading block, which is the honest
    comparison for truncated families whose edge levels are artifacts.
    """
    worst_off = 0.0
    scale = 0.0
    for pair in f.pairs:
        w = spec.to_eigenbasis(f.components[pair])
        if levels is not None:
            w = w[:levels, :levels]
        scale = max(scale, float(np.linalg.norm(w)))
        off = w - np.diag(np.diag(w))
        if off.size:
            worst_off = max(worst_off, float(np.max(np.abs(off))))
    if scale == 0.0:
        return 0.0
    return worst_off / scale


@dataclass(frozen=True)
class SmallLoopReport:
    """Holonomy of an eps-square against exp(i eps^2 F), at eps and eps/2."""

    eps: float
    difference: float
    halved_difference: float

    @property
    def ratio(self) -> float:
        if self.halved_difference == 0.0:
            return np.inf
        return self.difference / self.halved_difference


def _square_loop(lam, mu, nu, eps, n_params, refinement) -> PathSpec:
    e_mu = np.zeros(n_params)
    e_mu[mu] = 1.0
    e_nu = np.zeros(n_params)
    e_nu[nu] = 1.0
    c = np.asarray(lam, dtype=float) - 0.5 * eps * (e_mu + e_nu)
    corners = [c, c + eps * e_mu, c + eps * (e_mu + e_nu), c + eps * e_nu, c]
    return PathSpec(np.asarray(corners), closed=True, refinement=refinement)


def small_loop_check(
    model: ParametricHamiltonian,
    lam,
    mu: int,
    nu: int,
    eps: float,
    refinement: int = 50,
    gap_tol: float | None = None,
) -> SmallLoopReport:
    """Compare the holonomy of a centred eps-square in the (mu, nu) plane
    with exp(i eps^2 F_mu_nu).

    The two agree to O(eps^3), so halving eps should shrink the
    difference by about 8 (at least ~6 in practice; discretization keeps
    the floor well below the cubic term at the default refinement).
    """
    lam = np.asarray(lam, dtype=float)
    f = yang_mills_curvature(model, lam, gap_tol=gap_tol)

    def deviation(e: float) -> float:
        loop = _square_loop(lam, mu, nu, e, model.n_params, refinement)
        u = holonomy(model, loop, gap_tol=gap_tol).operator.matrix
        w = expm_hermitian(f.component(mu, nu), e * e).matrix
        return frobenius(u - w)

    return SmallLoopReport(
        eps=eps,
        difference=deviation(eps),
        halved_difference=deviation(0.5 * eps),
    )


# ---------------------------------------------------------------------------
# Surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfacePatch:
    """A parametrized 2-surface (u, v) in [0,1]^2 -> lambda with a grid.

    The boundary is traversed counterclockwise in (u, v) starting from
    (0, 0).  Charts may collapse an edge to a point (a polar cap does);
    boundary extraction drops the resulting duplicate nodes.
    """

    chart: Callable[[float, float], np.ndarray]
    grid: tuple[int, int]

    def __post_init__(self):
        nu, nv = self.grid
        if nu < 1 or nv < 1:
            raise ValueError("grid must have at least one cell per axis")

    def point(self, u: float, v: float) -> np.ndarray:
        return np.asarray(self.chart(u, v), dtype=float)

    def node(self, i: int, j: int) -> np.ndarray:
        nu, nv = self.grid
        return self.point(i / nu, j / nv)

    def boundary_nodes(self) -> np.ndarray:
        """Grid-resolution boundary polyline, counterclockwise from (0, 0)."""
        nu, nv = self.grid
        uv = (
            [(i / nu, 0.0) for i in range(nu)]
            + [(1.0, j / nv) for j in range(nv)]
            + [(i / nu, 1.0) for i in range(nu, 0, -1)]
            + [(0.0, j / nv) for j in range(nv, 0, -1)]
            + [(0.0, 0.0)]
        )
        pts = [self.point(u, v) for u, v in uv]
        deduped = [pts[0]]
        for p in pts[1:]:
            if np.linalg.norm(p - deduped[-1]) > 1e-14:
                deduped.append(p)
        # reclose in case deduplication swallowed the final node
        if len(deduped) > 1 and np.linalg.norm(deduped[-1] - deduped[0]) > 1e-14:
            deduped.append(deduped[0])
        return np.asarray(deduped)

    def boundary_path(self, refinement: int = 1) -> PathSpec:
        return PathSpec(self.boundary_nodes(), closed=True, refinement=refinement)


def _level_curvature_rows(
    model: ParametricHamiltonian, lam, levels, pairs, gap_tol
) -> np.ndarray:
    """W^(n)_mu_nu for the requested levels only, skipping frame phase
    fixing (the curvature row is phase-free) and touching one row of each
    gradient.  Degeneracy is guarded per requested level: only gaps to the
    level itself enter the denominators."""
    h = model.eval_h(lam)
    evals, vecs = np.linalg.eigh(h)
    if gap_tol is None:
        gap_tol = default_gap_tol(evals)
    grads = model.grad_h(lam)
    out = np.empty((len(levels), len(pairs)))
    for row, n in enumerate(levels):
        delta = evals[n] - evals
        delta[n] = np.inf
        nearest = float(np.min(np.abs(delta)))
        if nearest < gap_tol:
            raise DegenerateSpectrumError(min(n, int(np.argmin(np.abs(delta)))), nearest, gap_tol)
        bra = vecs[:, n].conj()
        rows = [(bra @ g) @ vecs for g in grads]  # <n|dH_mu|n'> for all n'
        inv2 = 1.0 / delta**2
        inv2[n] = 0.0
        for col, (mu, nu) in enumerate(pairs):
            out[row, col] = -2.0 * float(np.sum(np.imag(rows[mu] * rows[nu].conj()) * inv2))
    return out


def berry_phase_surface(
    model: ParametricHamiltonian,
    patch: SurfacePatch,
    level,
    grid: tuple[int, int] | None = None,
    gap_tol: float | None = None,
    refine_check_tol: float | None = None,
):
    """Surface-integrated Berry phase over a patch, per level.

    Midpoint rule over the (u, v) grid; the integrand is the per-level
    curvature contracted with the pullback Jacobian, whose tangents come
    from central differences of the chart at each cell centre.  ``level``
    may be an int or a sequence of ints (one grid sweep either way); the
    returned phase(s) are not wrapped.

    With ``refine_check_tol`` set, the integral is recomputed on a doubled
    grid; disagreement above the tolerance raises
    :class:`GridTooCoarseError`, otherwise the finer value is returned.
    """
    levels = [level] if np.isscalar(level) else list(level)
    n_params = model.n_params
    all_pairs = [(mu, nu) for mu in range(n_params) for nu in range(mu + 1, n_params)]

    def integrate(nu_grid: int, nv_grid: int) -> np.ndarray:
        du, dv = 1.0 / nu_grid, 1.0 / nv_grid
        total = np.zeros(len(levels))
        for i in range(nu_grid):
            u = (i + 0.5) * du
            for j in range(nv_grid):
                v = (j + 0.5) * dv
                t_u = (patch.point(u + 0.5 * du, v) - patch.point(u - 0.5 * du, v)) / du
                t_v = (patch.point(u, v + 0.5 * dv) - patch.point(u, v - 0.5 * dv)) / dv
                jac = [
                    t_u[mu] * t_v[nu] - t_v[mu] * t_u[nu] for mu, nu in all_pairs
                ]
                live = [k for k, j_k in enumerate(jac) if j_k != 0.0]
                if not live:
                    continue
                pairs = [all_pairs[k] for k in live]
                w = _level_curvature_rows(model, patch.point(u, v), levels, pairs, gap_tol)
                total += (w @ np.asarray([jac[k] for k in live])) * (du * dv)
        return total

    nu_grid, nv_grid = grid if grid is not None else patch.grid
    phase = integrate(nu_grid, nv_grid)
    if refine_check_tol is not None:
        finer = integrate(2 * nu_grid, 2 * nv_grid)
        if np.max(np.abs(finer - phase)) > refine_check_tol:
            raise GridTooCoarseError(
                f"grid-doubling moved the integral by {np.max(np.abs(finer - phase)):.3e} "
                f"(> {refine_check_tol:.3e}); refine the surface grid"
            )
        phase = finer
    if np.isscalar(level):
        return float(phase[0])
    return phase
