"""Ready-made loops and surface patches for the built-in models.

Spherical builders work in the (B, theta, phi) chart of the spin model;
planar builders produce flat patches/loops for any model (the oscillator's
(X, Y, Z) space in particular).  Loops that pass through the polar axis
close there: the azimuthal leg along the pole carries no transport, so it
costs nothing and keeps paths coordinate-closed.
"""

from __future__ import annotations

import numpy as np

from .transport import PathSpec
from .curvature import SurfacePatch

__all__ = [
    "su2_triangle_loop",
    "su2_circle_loop",
    "su2_wedge_patch",
    "su2_cap_patch",
    "planar_patch",
    "planar_rectangle_loop",
    "cap_polar_angle",
]


def su2_triangle_loop(
    omega: float, b: float = 1.0, refinement: int = 2000, theta_max: float = np.pi / 2
) -> PathSpec:
    """Geodesic triangle: pole -> equator at phi=0 -> along the equator by
    ``omega`` -> back to the pole, closed along the polar axis.

    For theta_max = pi/2 the enclosed solid angle equals ``omega``.
    """
    if not 0.0 < omega < 2.0 * np.pi:
        raise ValueError("azimuthal span must lie in (0, 2*pi)")
    samples = np.array(
        [
            [b, 0.0, 0.0],
            [b, theta_max, 0.0],
            [b, theta_max, omega],
            [b, 0.0, omega],
            [b, 0.0, 0.0],
        ]
    )
    return PathSpec(samples, closed=True, refinement=refinement)


def su2_circle_loop(theta0: float, b: float = 1.0, refinement: int = 500) -> PathSpec:
    """Full circle of colatitude ``theta0``, anchored at the pole.

    Realized as the boundary of the enclosed cap (meridian down, circle
    around, meridian back), so the path is coordinate-closed; the solid
    angle is 2*pi*(1 - cos(theta0)).
    """
    if not 0.0 < theta0 < np.pi:
        raise ValueError("theta0 must lie strictly between the poles")
    samples = np.array(
        [
            [b, 0.0, 0.0],
            [b, theta0, 0.0],
            [b, theta0, 2.0 * np.pi],
            [b, 0.0, 2.0 * np.pi],
            [b, 0.0, 0.0],
        ]
    )
    return PathSpec(samples, closed=True, refinement=refinement)


def su2_wedge_patch(
    omega: float,
    b: float = 1.0,
    grid: tuple[int, int] = (50, 50),
    theta_max: float = np.pi / 2,
) -> SurfacePatch:
    """Spherical wedge theta in [0, theta_max], phi in [0, omega].

    Its boundary is :func:`su2_triangle_loop`; the enclosed solid angle is
    omega * (1 - cos(theta_max)).
    """
    if not 0.0 < omega < 2.0 * np.pi:
        raise ValueError("azimuthal span must lie in (0, 2*pi)")

    def chart(u, v):
        return np.array([b, u * theta_max, v * omega])

    return SurfacePatch(chart=chart, grid=grid)


def cap_polar_angle(omega: float) -> float:
    """Colatitude of the cap enclosing solid angle ``omega``."""
    if not 0.0 < omega < 4.0 * np.pi:
        raise ValueError("solid angle must lie in (0, 4*pi)")
    return float(np.arccos(1.0 - omega / (2.0 * np.pi)))


def su2_cap_patch(omega: float, b: float = 1.0, grid: tuple[int, int] = (50, 50)) -> SurfacePatch:
    """Polar cap of solid angle ``omega``: theta in [0, arccos(1 - omega/2pi)],
    phi over the full turn."""
    theta_max = cap_polar_angle(omega)

    def chart(u, v):
        return np.array([b, u * theta_max, v * 2.0 * np.pi])

    return SurfacePatch(chart=chart, grid=grid)


def planar_patch(origin, edge_u, edge_v, grid: tuple[int, int] = (50, 50)) -> SurfacePatch:
    """Flat parallelogram patch lambda(u, v) = origin + u*edge_u + v*edge_v."""
    origin = np.asarray(origin, dtype=float)
    edge_u = np.asarray(edge_u, dtype=float)
    edge_v = np.asarray(edge_v, dtype=float)

    def chart(u, v):
        return origin + u * edge_u + v * edge_v

    return SurfacePatch(chart=chart, grid=grid)


def planar_rectangle_loop(origin, edge_u, edge_v, refinement: int = 500) -> PathSpec:
    """Boundary of :func:`planar_patch`, counterclockwise from the origin."""
    origin = np.asarray(origin, dtype=float)
    edge_u = np.asarray(edge_u, dtype=float)
    edge_v = np.asarray(edge_v, dtype=float)
    samples = np.array(
        [origin, origin + edge_u, origin + edge_u + edge_v, origin + edge_v, origin]
    )
    return PathSpec(samples, closed=True, refinement=refinement)
