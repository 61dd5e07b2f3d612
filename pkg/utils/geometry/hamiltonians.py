"""Smooth ambient functions used as Hamiltonians: constants, quadratics, Fourier sums on tori
and polynomials in the embedding coordinates of the sphere."""

from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from utils.exceptions import ModelConfigurationError, UnsupportedModelError
from utils.geometry.ambient import AmbientModel, ConformalSphere


class AmbientFunction:
    """f on chart points; `gradient` returns the chart gradient (m, 2n)."""

    label = "function"

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return self.label


class ConstantFunction(AmbientFunction):
    label = "constant"

    def __init__(self, constant: float = 0.0):
        self.constant = float(constant)

    def value(self, x):
        return np.full(np.atleast_2d(x).shape[0], self.constant)

    def gradient(self, x):
        return np.zeros_like(np.atleast_2d(np.asarray(x, dtype=float)))

    def describe(self) -> str:
        return f"constant {self.constant:g}"


class QuadraticFunction(AmbientFunction):
    """f(x) = 1/2 x^T Q x + b^T x."""

    label = "quadratic"

    def __init__(self, matrix: np.ndarray, linear: Optional[np.ndarray] = None):
        self.matrix = 0.5 * (np.asarray(matrix, dtype=float) + np.asarray(matrix, dtype=float).T)
        self.linear = np.zeros(len(self.matrix)) if linear is None else np.asarray(linear, dtype=float)

    def value(self, x):
        x = np.atleast_2d(x)
        return 0.5 * np.einsum("mi,ij,mj->m", x, self.matrix, x) + x @ self.linear

    def gradient(self, x):
        return np.atleast_2d(x) @ self.matrix + self.linear


def rotation_generator(dim_real: int) -> QuadraticFunction:
    """|z|^2 / 2: its flow rotates every complex coordinate."""
    return QuadraticFunction(np.eye(dim_real))


class FourierFunction(AmbientFunction):
    """f(x) = sum_j a_j cos(k_j . x + phi_j)."""

    label = "fourier"

    def __init__(self, amplitudes: Sequence[float], wave_vectors: Sequence[Sequence[float]], phases: Optional[Sequence[float]] = None):
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.wave_vectors = np.atleast_2d(np.asarray(wave_vectors, dtype=float))
        self.phases = np.zeros(len(self.amplitudes)) if phases is None else np.asarray(phases, dtype=float)
        if not (len(self.amplitudes) == len(self.wave_vectors) == len(self.phases)):
            raise ModelConfigurationError("Fourier amplitudes, wave vectors and phases differ in length")

    def _arguments(self, x):
        return np.atleast_2d(x) @ self.wave_vectors.T + self.phases

    def value(self, x):
        return np.cos(self._arguments(x)) @ self.amplitudes

    def gradient(self, x):
        return -(np.sin(self._arguments(x)) * self.amplitudes) @ self.wave_vectors

    def describe(self) -> str:
        return f"fourier[{len(self.amplitudes)} modes]"


def random_fourier(rng: np.random.Generator, dim_real: int, modes: int = 4, max_frequency: int = 2, amplitude: float = 0.1) -> FourierFunction:
    """Random lattice-periodic Fourier sum for the 2*pi square lattice."""
    wave_vectors = rng.integers(-max_frequency, max_frequency + 1, size=(modes, dim_real))
    wave_vectors[np.all(wave_vectors == 0, axis=1), 0] = 1
    return FourierFunction(
        rng.normal(scale=amplitude, size=modes), wave_vectors, rng.uniform(0.0, 2.0 * np.pi, size=modes)
    )


def fourier_basis(dim_real: int, max_frequency: int) -> List[FourierFunction]:
    """cos and sin modes with integer wave vectors up to max_frequency per coordinate, one per +-k pair."""
    if max_frequency > config.MAX_BASIS_DEGREE:
        raise ModelConfigurationError(f"Fourier degree above {config.MAX_BASIS_DEGREE}")
    basis = []
    for k in product(range(-max_frequency, max_frequency + 1), repeat=dim_real):
        k = np.array(k)
        nonzero = k[k != 0]
        if not len(nonzero) or nonzero[0] < 0:
            continue
        basis.append(FourierFunction([1.0], [k]))
        basis.append(FourierFunction([1.0], [k], [-0.5 * np.pi]))
    return basis


class SpherePolynomial(AmbientFunction):
    """Polynomial in the embedding coordinates (X, Y, Z) of the unit sphere, pulled back to the chart."""

    label = "sphere_polynomial"

    def __init__(self, model: ConformalSphere, coefficients: Dict[Tuple[int, int, int], float]):
        if not isinstance(model, ConformalSphere):
            raise UnsupportedModelError("sphere polynomials need a sphere model")
        degree = max((sum(p) for p in coefficients), default=0)
        if degree > config.MAX_BASIS_DEGREE:
            raise ModelConfigurationError(f"polynomial degree {degree} above {config.MAX_BASIS_DEGREE}")
        self.model = model
        self.coefficients = {tuple(int(e) for e in p): float(c) for p, c in coefficients.items()}

    def for_chart(self, model: ConformalSphere) -> "SpherePolynomial":
        return SpherePolynomial(model, self.coefficients)

    def value_on_sphere(self, u: np.ndarray) -> np.ndarray:
        total = np.zeros(u.shape[0])
        for (i, j, k), c in self.coefficients.items():
            total += c * u[:, 0] ** i * u[:, 1] ** j * u[:, 2] ** k
        return total

    def _sphere_gradient(self, u: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(u)
        for (i, j, k), c in self.coefficients.items():
            if i:
                grad[:, 0] += c * i * u[:, 0] ** (i - 1) * u[:, 1] ** j * u[:, 2] ** k
            if j:
                grad[:, 1] += c * j * u[:, 0] ** i * u[:, 1] ** (j - 1) * u[:, 2] ** k
            if k:
                grad[:, 2] += c * k * u[:, 0] ** i * u[:, 1] ** j * u[:, 2] ** (k - 1)
        return grad

    def value(self, x):
        u, _ = self.model.embed(np.atleast_2d(x))
        return self.value_on_sphere(u)

    def gradient(self, x):
        u, jac = self.model.embed(np.atleast_2d(x))
        return np.einsum("mk,mki->mi", self._sphere_gradient(u), jac)

    def describe(self) -> str:
        terms = " + ".join(f"{c:g}*X^{i}Y^{j}Z^{k}" for (i, j, k), c in sorted(self.coefficients.items()))
        return terms or "0"


def sphere_polynomial_basis(model: ConformalSphere, degree: int) -> List[SpherePolynomial]:
    """All non-constant monomials X^i Y^j Z^k with i + j + k <= degree."""
    if degree > config.MAX_BASIS_DEGREE:
        raise ModelConfigurationError(f"polynomial degree {degree} above {config.MAX_BASIS_DEGREE}")
    return [
        SpherePolynomial(model, {(i, j, k): 1.0})
        for total in range(1, degree + 1)
        for i in range(total + 1)
        for j in range(total + 1 - i)
        for k in [total - i - j]
    ]


def hamiltonian_vector_field(model: AmbientModel, f: AmbientFunction, x: np.ndarray) -> np.ndarray:
    """X_f with omega(X_f, .) = df, i.e. X_f = -J G^-1 grad f."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    raised = np.linalg.solve(model.metric(x), f.gradient(x)[..., None])[..., 0]
    return -raised @ model.J.T


def quadratic_basis(dim_real: int) -> List[QuadraticFunction]:
    """Coordinate functions and all quadratic monomials x_i x_j on the flat chart."""
    eye = np.eye(dim_real)
    basis = [QuadraticFunction(np.zeros((dim_real, dim_real)), eye[k]) for k in range(dim_real)]
    for i in range(dim_real):
        for j in range(i, dim_real):
            matrix = np.outer(eye[i], eye[j]) + np.outer(eye[j], eye[i])
            basis.append(QuadraticFunction(matrix if i != j else 0.5 * matrix))
    return basis
