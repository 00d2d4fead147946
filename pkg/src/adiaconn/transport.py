"""Parallel transport of eigenframes along parameter-space paths.

The transport operator is the path-ordered exponential of the connection,
discretized as an ordered product of exponentials with the connection
evaluated at segment midpoints (second-order accurate).  Closed loops give
holonomies, whose diagonality in the starting eigenbasis encodes one Berry
phase per level; a discrete Wilson-loop overlap product provides an
independent, phase-convention-free oracle for the same phases.  The module
also integrates driven dynamics in which the connection acts as the
counterdiabatic term that keeps a state locked to an instantaneous
eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operator_core import (
    SpectralDecomposition,
    UnitaryOperator,
    expm_hermitian,
    frobenius,
    wrap_phase,
)
from .models import ParametricHamiltonian
from .connection import connection_spectral

__all__ = [
    "PathSpec",
    "TransportResult",
    "HolonomyResult",
    "Schedule",
    "StepSizeError",
    "transport_operator",
    "holonomy",
    "wilson_loop_phases",
    "counterdiabatic_evolve",
    "linear_schedule",
    "DrivingResult",
]

UNRELIABLE_OFFDIAG = 1e-3


class StepSizeError(Exception):
    """Integrator step too large for the requested norm-drift budget."""


@dataclass(frozen=True)
class PathSpec:
    """A polyline in parameter space with a per-segment refinement count.

    ``samples`` is a (K+1, N) array of parameter points; each of the K
    segments is split into ``refinement`` equal steps when transported.
    """

    samples: np.ndarray
    closed: bool = False
    refinement: int = 100

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if pts.ndim != 2:
            raise ValueError("path samples must be a (K+1, N) array")
        if self.refinement < 1:
            raise ValueError("refinement must be at least 1")
        deltas = np.diff(pts, axis=0)
        if len(pts) > 1 and np.any(np.linalg.norm(deltas, axis=1) == 0.0):
            raise ValueError("consecutive path samples must be distinct")
        if self.closed and len(pts) > 1:
            if np.linalg.norm(pts[-1] - pts[0]) > 1e-12:
                raise ValueError("closed path must end where it starts")
        pts.setflags(write=False)
        object.__setattr__(self, "samples", pts)

    @property
    def n_params(self) -> int:
        return self.samples.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.samples[0]

    @property
    def end(self) -> np.ndarray:
        return self.samples[-1]

    def steps(self):
        """Yield (midpoint, delta) for every refined step, in path order."""
        r = self.refinement
        for a, b in zip(self.samples[:-1], self.samples[1:]):
            delta = (b - a) / r
            for k in range(r):
                yield a + (k + 0.5) * (b - a) / r, delta

    def refined_points(self) -> np.ndarray:
        """All refined nodes from start to end inclusive."""
        r = self.refinement
        out = [self.samples[0]]
        for a, b in zip(self.samples[:-1], self.samples[1:]):
            for k in range(1, r + 1):
                out.append(a + k * (b - a) / r)
        return np.asarray(out)

    def reversed(self) -> "PathSpec":
        return PathSpec(self.samples[::-1].copy(), closed=self.closed, refinement=self.refinement)


@dataclass(frozen=True)
class TransportResult:
    """Ordered-exponential transport along a path.

    ``operator`` maps the eigenframe at the start point onto the
    transported frame; ``conjugation_residual`` measures how far
    U H(start) U^dag falls from H(end).  It vanishes (up to
    discretization) only for families with parameter-independent spectra;
    for drifting spectra it is a diagnostic, not an invariant -- the
    transported columns remain eigenvectors of H(end) either way.
    """

    operator: UnitaryOperator
    transported_frame: UnitaryOperator
    conjugation_residual: float
    start_spec: SpectralDecomposition


@dataclass(frozen=True)
class HolonomyResult:
    """Closed-loop transport, reduced to the starting eigenbasis.

    ``phases[n]`` is the argument of the n-th diagonal entry of the loop
    operator in the eigenbasis at the base point, in (-pi, pi];
    ``offdiag_residual`` is the largest off-diagonal magnitude there.  A
    residual above 1e-3 marks the phase readout unreliable.
    """

    operator: UnitaryOperator
    eigenbasis_operator: np.ndarray
    phases: np.ndarray
    offdiag_residual: float

    @property
    def reliable(self) -> bool:
        return self.offdiag_residual <= UNRELIABLE_OFFDIAG


def _step_generator(model: ParametricHamiltonian, mid, delta, gap_tol) -> np.ndarray:
    """Connection contracted with a step, sum_mu A_mu(mid) delta_mu.

    The gradient is contracted with the step before changing basis, so
    each step costs one eigen-decomposition regardless of the number of
    parameters.
    """
    spec = model.spectral_at(mid, gap_tol=gap_tol)
    grads = model.grad_h(mid)
    g_delta = np.zeros((model.dim, model.dim), dtype=complex)
    for g, d in zip(grads, delta):
        if d != 0.0:
            g_delta += d * g
    return connection_spectral(spec, [g_delta]).components[0]


def transport_operator(
    model: ParametricHamiltonian, path: PathSpec, gap_tol: float | None = None
) -> TransportResult:
    """Path-ordered exponential of the connection along ``path``.

    U = prod_k exp(i sum_mu A_mu(midpoint_k) delta_k,mu), ordered so the
    first step acts first.  The transported frame is U applied to the
    phase-fixed eigenframe at the start point.
    """
    if path.n_params != model.n_params:
        raise ValueError("path dimensionality does not match the model")
    start_spec = model.spectral_at(path.start, gap_tol=gap_tol)
    u = np.eye(model.dim, dtype=complex)
    for mid, delta in path.steps():
        gen = _step_generator(model, mid, delta, gap_tol)
        if not np.all(np.isfinite(gen.view(float))):
            raise ValueError(f"non-finite connection at {np.asarray(mid).tolist()}")
        u = expm_hermitian(gen, 1.0).matrix @ u
    h_start = model.eval_h(path.start)
    h_end = model.eval_h(path.end)
    residual = frobenius(h_end - u @ h_start @ u.conj().T) / max(frobenius(h_start), 1e-300)
    return TransportResult(
        operator=UnitaryOperator(u, tol=1e-8),
        transported_frame=UnitaryOperator(u @ start_spec.frame.matrix, tol=1e-8),
        conjugation_residual=float(residual),
        start_spec=start_spec,
    )


def holonomy(
    model: ParametricHamiltonian, loop: PathSpec, gap_tol: float | None = None
) -> HolonomyResult:
    """Loop holonomy with per-level phase extraction.

    For a non-degenerate family the loop operator is diagonal in the
    eigenbasis of the base point (up to discretization error), with the
    Berry phase of each level on the diagonal.
    """
    if not loop.closed:
        raise ValueError("holonomy requires a closed loop")
    result = transport_operator(model, loop, gap_tol=gap_tol)
    v0 = result.start_spec.frame.matrix
    w = v0.conj().T @ result.operator.matrix @ v0
    off = w - np.diag(np.diag(w))
    offdiag_residual = float(np.max(np.abs(off))) if w.shape[0] > 1 else 0.0
    phases = wrap_phase(np.angle(np.diag(w)))
    return HolonomyResult(
        operator=result.operator,
        eigenbasis_operator=w,
        phases=phases,
        offdiag_residual=offdiag_residual,
    )


def wilson_loop_phases(
    model: ParametricHamiltonian,
    loop: PathSpec,
    gap_tol: float | None = None,
    min_overlap: float = 0.1,
) -> np.ndarray:
    """Discrete Wilson-loop Berry phases, one per level.

    phi_n = -arg prod_k <n(lambda_k)|n(lambda_{k+1})>, with the final
    overlap closing onto the very same eigenvector objects used at the
    start, so the product is exactly independent of the eigenvector phase
    convention.  Consecutive overlaps below ``min_overlap`` in magnitude
    abort with a refinement hint instead of returning garbage.
    """
    if not loop.closed:
        raise ValueError("wilson_loop_phases requires a closed loop")
    nodes = loop.refined_points()
    if len(nodes) > 1:
        nodes = nodes[:-1]  # closing node coincides with the first
    frames = [model.spectral_at(p, gap_tol=gap_tol).frame.matrix for p in nodes]
    product = np.ones(model.dim, dtype=complex)
    count = len(frames)
    for k in range(count):
        f_now, f_next = frames[k], frames[(k + 1) % count]
        overlaps = np.einsum("in,in->n", f_now.conj(), f_next)
        small = np.abs(overlaps) < min_overlap
        if np.any(small):
            level = int(np.nonzero(small)[0][0])
            raise ValueError(
                f"consecutive eigenvectors nearly orthogonal at node {k} "
                f"(level {level}, |overlap| = {np.abs(overlaps[level]):.3f}); "
                "refine the loop"
            )
        product *= overlaps
    return wrap_phase(-np.angle(product))


# ---------------------------------------------------------------------------
# Counterdiabatic driving
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Time-dependent parameter sweep lambda(t) on [0, total_time]."""

    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    total_time: float

    def __post_init__(self):
        if self.total_time <= 0.0:
            raise ValueError("schedule duration must be positive")


def linear_schedule(start, end, total_time: float) -> Schedule:
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    rate = (end - start) / total_time
    return Schedule(
        position=lambda t: start + rate * t,
        velocity=lambda t: rate,
        total_time=total_time,
    )


@dataclass(frozen=True)
class DrivingResult:
    """Trajectory report of a driven evolution.

    ``fidelities[k]`` is |<n0(lambda(t_k))|psi(t_k)>|^2 against the
    instantaneous eigenvector of the tracked level; ``final_phase`` is the
    argument of that overlap at the end (dynamical plus geometric, gauge
    fixed by the phase convention).
    """

    times: np.ndarray
    fidelities: np.ndarray
    phases: np.ndarray
    norm_drifts: np.ndarray
    final_phase: float
    counterdiabatic: bool

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.fidelities))


def counterdiabatic_evolve(
    model: ParametricHamiltonian,
    schedule: Schedule,
    n0: int,
    dt: float,
    include_cd: bool = True,
    norm_drift_tol: float = 1e-8,
    gap_tol: float | None = None,
) -> DrivingResult:
    """Integrate i dpsi/dt = [H(lambda(t)) - sum_mu d(lambda_mu)/dt A_mu] psi.

    Fixed-step 4th-order Runge-Kutta from psi(0) = |n0(lambda(0))>.  With
    the connection term included the evolution is transitionless: the
    fidelity against the instantaneous eigenvector stays at 1 up to
    integrator error, at any sweep rate.  The sign of the extra term is
    fixed by the transport convention d|n> = +i A |n>: a state riding
    |n(lambda(t))> needs the generator H - lambdadot . A, which for the
    polar sweep of a spin-1/2 reproduces the familiar counterdiabatic
    field +(thetadot/2) sigma_y.  ``include_cd=False`` drops the term for
    diabatic control runs.

    Raises :class:`StepSizeError` when the norm drifts more than
    ``norm_drift_tol`` per unit time, which signals that ``dt`` is too
    large for the spectral scale of the generator.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not 0 <= n0 < model.dim:
        raise ValueError(f"level index {n0} out of range for dim {model.dim}")

    def generator(t: float) -> np.ndarray:
        lam = schedule.position(t)
        h = model.eval_h(lam)
        if include_cd:
            spec = model.spectral_at(lam, gap_tol=gap_tol)
            grads = model.grad_h(lam)
            vel = np.asarray(schedule.velocity(t), dtype=float)
            g_vel = np.zeros_like(h)
            for g, v in zip(grads, vel):
                if v != 0.0:
                    g_vel += v * g
            h = h - connection_spectral(spec, [g_vel]).components[0]
        return h

    n_steps = max(int(round(schedule.total_time / dt)), 1)
    dt = schedule.total_time / n_steps
    spec0 = model.spectral_at(schedule.position(0.0), gap_tol=gap_tol)
    psi = spec0.frame.matrix[:, n0].copy()

    times = np.empty(n_steps + 1)
    fidelities = np.empty(n_steps + 1)
    phases = np.empty(n_steps + 1)
    drifts = np.empty(n_steps + 1)

    def record(k: int, t: float):
        times[k] = t
        target = model.spectral_at(schedule.position(t), gap_tol=gap_tol).frame.matrix[:, n0]
        overlap = np.vdot(target, psi)
        fidelities[k] = np.abs(overlap) ** 2
        phases[k] = np.angle(overlap)
        drifts[k] = abs(np.linalg.norm(psi) - 1.0)

    record(0, 0.0)
    for k in range(n_steps):
        t = k * dt
        h1 = generator(t)
        h2 = generator(t + 0.5 * dt)
        h4 = generator(t + dt)
        k1 = -1j * (h1 @ psi)
        k2 = -1j * (h2 @ (psi + 0.5 * dt * k1))
        k3 = -1j * (h2 @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h4 @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        record(k + 1, t + dt)
        if drifts[k + 1] > norm_drift_tol * max(t + dt, 1.0):
            raise StepSizeError(
                f"norm drift {drifts[k + 1]:.3e} at t = {t + dt:.4g} exceeds budget; "
                f"reduce dt below {dt:.3e}"
            )

    return DrivingResult(
        times=times,
        fidelities=fidelities,
        phases=phases,
        norm_drifts=drifts,
        final_phase=float(phases[-1]),
        counterdiabatic=include_cd,
    )
