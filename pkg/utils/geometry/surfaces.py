"""Parametrizations of the loops and tori used by scenarios and tests.

Loops map t in [0, 1) to chart points, tori map (s, t) in [0, 1)^2; all are vectorized.
"""

from typing import Callable, Sequence

import numpy as np

from utils.geometry.ambient import ConformalSphere, FlatTorus, PotentialKahler
from utils.geometry.lagmesh import legendre_graph_parametrization
from utils.models.ambient_model import FourierModeSchema

TAU = 2.0 * np.pi


def circle(radius: float = 1.0, center: Sequence[float] = (0.0, 0.0), turns: int = 1) -> Callable:
    """Counter-clockwise circle in C, traversed `turns` times."""
    center = np.asarray(center, dtype=float)

    def parametrization(t):
        angle = TAU * turns * np.asarray(t, dtype=float)
        return center + radius * np.stack([np.cos(angle), np.sin(angle)], axis=-1)

    return parametrization


def sphere_curve(model: ConformalSphere, height: Callable[[np.ndarray], np.ndarray]) -> Callable:
    """Loop on the sphere given by the height of the unit-sphere point over the longitude 2*pi*t."""

    def parametrization(t):
        angle = TAU * np.asarray(t, dtype=float)
        z = height(angle)
        rho = np.sqrt(1.0 - z**2)
        return model.chart_point(np.stack([rho * np.cos(angle), rho * np.sin(angle), z], axis=-1))

    return parametrization


def sphere_latitude(model: ConformalSphere, polar_angle: float) -> Callable:
    """Latitude at polar angle theta_0 from the chart-origin pole, counter-clockwise in the chart."""
    radius = np.tan(0.5 * polar_angle)

    def parametrization(t):
        angle = TAU * np.asarray(t, dtype=float)
        return radius * np.stack([np.cos(angle), np.sin(angle)], axis=-1)

    return parametrization


def perturbed_equator(model: ConformalSphere, amplitude: float = 0.05, frequency: int = 3) -> Callable:
    """Equator pushed up and down by amplitude * sin(frequency * longitude); odd frequencies keep both halves equal in area."""
    return sphere_curve(model, lambda angle: amplitude * np.sin(frequency * angle))


def straight_line(direction: Sequence[int] = (1, 0), offset: float = 0.3) -> Callable:
    """Closed geodesic t -> offset*i + t*(2*pi*p, 2*pi*q) on the square elliptic curve."""
    p, q = direction
    normal = np.array([-q, p], dtype=float) / np.hypot(p, q)

    def parametrization(t):
        t = np.asarray(t, dtype=float)[..., None]
        return offset * normal + TAU * t * np.array([p, q], dtype=float)

    return parametrization


def wiggly_line(amplitude: float = 0.3, frequency: int = 1) -> Callable:
    """t -> (2*pi*t, amplitude * sin(2*pi*frequency*t)): a closed loop on the elliptic curve with Maslov class 0."""

    def parametrization(t):
        angle = TAU * np.asarray(t, dtype=float)
        return np.stack([angle, amplitude * np.sin(frequency * angle)], axis=-1)

    return parametrization


def product_torus(r1: float = 1.0, r2: float = 1.0) -> Callable:
    """S^1(r1) x S^1(r2) in C^2, coordinates (Re z1, Re z2, Im z1, Im z2)."""

    def parametrization(s, t):
        a = TAU * np.asarray(s, dtype=float)
        b = TAU * np.asarray(t, dtype=float)
        return np.stack([r1 * np.cos(a), r2 * np.cos(b), r1 * np.sin(a), r2 * np.sin(b)], axis=-1)

    return parametrization


def graph_torus(delta: float = 0.1) -> Callable:
    """(e^{is}, e^{i(t + delta sin s)}): Lagrangian for the flat form."""

    def parametrization(s, t):
        a = TAU * np.asarray(s, dtype=float)
        b = TAU * np.asarray(t, dtype=float) + delta * np.sin(a)
        return np.stack([np.cos(a), np.cos(b), np.sin(a), np.sin(b)], axis=-1)

    return parametrization


def tilted_torus(tilt: float = 0.1) -> Callable:
    """(e^{is} + tilt*e^{it}, e^{it}): totally real but not Lagrangian."""

    def parametrization(s, t):
        a = TAU * np.asarray(s, dtype=float)
        b = TAU * np.asarray(t, dtype=float)
        return np.stack(
            [np.cos(a) + tilt * np.cos(b), np.cos(b), np.sin(a) + tilt * np.sin(b), np.sin(b)], axis=-1
        )

    return parametrization


def fibre_modes() -> list:
    """h(y) = cos y1 + cos y2 + cos(y1 + y2), a potential perturbation depending on the fibre only."""
    return [
        FourierModeSchema(amplitude=1.0, wave_vector=[0.0, 0.0, 1.0, 0.0]),
        FourierModeSchema(amplitude=1.0, wave_vector=[0.0, 0.0, 0.0, 1.0]),
        FourierModeSchema(amplitude=1.0, wave_vector=[0.0, 0.0, 1.0, 1.0]),
    ]


def potential_torus_model(epsilon: float = 0.05) -> PotentialKahler:
    return PotentialKahler(FlatTorus(2), fibre_modes(), epsilon)


def legendre_torus(model: PotentialKahler, delta: float = 0.3, offset: Sequence[float] = (0.3, 0.5)) -> Callable:
    """Graph torus {grad Phi(y) = offset + grad(delta cos x1)}."""

    def momentum(x):
        return np.stack([-delta * np.sin(x[..., 0]), np.zeros(x.shape[:-1])], axis=-1)

    return legendre_graph_parametrization(model, momentum, np.asarray(offset, dtype=float))
