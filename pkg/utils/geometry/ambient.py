"""Chart-based model Kähler manifolds.

Chart coordinates are real vectors x = (Re z_1..Re z_n, Im z_1..Im z_n). The complex
structure is the standard one, I(a, b) = (-b, a), and every model is described by its
metric G; the symplectic form follows from G(X, Y) = omega(X, I Y), i.e. Omega = -G I.
All evaluators take a batch of points of shape (m, 2n) and are pure functions of
(model, points).
"""

from logging import getLogger
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

import config
from utils.exceptions import DimensionError, DomainError, ModelConfigurationError, UnsupportedModelError
from utils.models.ambient_model import (
    AmbientModelDocument,
    FlatComplexParams,
    FlatTorusParams,
    FourierModeSchema,
    PotentialKahlerParams,
    SphereParams,
)

LOGGER = getLogger(__name__)

EPS = np.finfo(float).eps


def complex_structure(n: int) -> np.ndarray:
    """Matrix of I acting on chart vectors (a, b) -> (-b, a)."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def hermitian_to_real(h: np.ndarray) -> np.ndarray:
    """Real symmetric matrix [[A, B], [-B, A]] of a hermitian block h = A + iB."""
    a, b = h.real, h.imag
    top = np.concatenate([a, b], axis=-1)
    bottom = np.concatenate([-b, a], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


class AmbientModel:
    kind = "abstract"
    curved = True

    def __init__(self, dim_complex: int):
        if dim_complex not in (1, 2):
            raise ModelConfigurationError(f"complex dimension {dim_complex} not in {{1, 2}}")
        self.dim_complex = dim_complex
        self.J = complex_structure(dim_complex)

    @property
    def dim_real(self) -> int:
        return 2 * self.dim_complex

    @property
    def lattice(self) -> Optional[np.ndarray]:
        return None

    @property
    def has_holomorphic_volume(self) -> bool:
        return False

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_document().params})"

    def validate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[-1] != self.dim_real:
            raise DimensionError(f"expected points of shape (m, {self.dim_real}), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite chart coordinates")
        return x

    def metric(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        """dG[m, l, i, j] = d_l G_ij; central differences unless a model knows better."""
        x = self.validate(x)
        step = EPS ** config.FD_FIRST_EXPONENT * np.maximum(1.0, np.abs(x).max(axis=-1))
        out = np.empty((x.shape[0], self.dim_real, self.dim_real, self.dim_real))
        for l in range(self.dim_real):
            shift = np.zeros_like(x)
            shift[:, l] = step
            out[:, l] = (self.metric(x + shift) - self.metric(x - shift)) / (2.0 * step[:, None, None])
        return out

    def symplectic(self, x: np.ndarray) -> np.ndarray:
        return -self.metric(x) @ self.J

    def christoffels(self, x: np.ndarray) -> np.ndarray:
        """Gamma[m, k, i, j] of the Levi-Civita connection."""
        g = self.metric(x)
        dg = self.metric_derivative(x)
        g_inv = np.linalg.inv(g)
        # T_ijl = d_i G_jl + d_j G_il - d_l G_ij
        lowered = dg + np.swapaxes(dg, 1, 2) - np.transpose(dg, (0, 2, 3, 1))
        return 0.5 * np.einsum("mkl,mijl->mkij", g_inv, lowered)

    def log_volume_density(self, x: np.ndarray) -> np.ndarray:
        """log det of the hermitian metric block, i.e. half of log det G."""
        return 0.5 * np.linalg.slogdet(self.metric(x))[1]

    def ricci_form(self, x: np.ndarray) -> np.ndarray:
        """rho = -i ddbar log det h, by a central-difference complex Hessian."""
        x = self.validate(x)
        m, d = x.shape
        n = self.dim_complex
        step = EPS ** config.FD_SECOND_EXPONENT * np.maximum(1.0, np.abs(x).max(axis=-1))
        hessian = np.empty((m, d, d))
        for a in range(d):
            for b in range(a, d):
                ea = np.zeros(d)
                eb = np.zeros(d)
                ea[a] = 1.0
                eb[b] = 1.0
                sa = step[:, None] * ea
                sb = step[:, None] * eb
                value = (
                    self.log_volume_density(x + sa + sb)
                    - self.log_volume_density(x + sa - sb)
                    - self.log_volume_density(x - sa + sb)
                    + self.log_volume_density(x - sa - sb)
                ) / (4.0 * step**2)
                hessian[:, a, b] = value
                hessian[:, b, a] = value
        fxx, fxy = hessian[:, :n, :n], hessian[:, :n, n:]
        fyx, fyy = hessian[:, n:, :n], hessian[:, n:, n:]
        ddbar = 0.25 * ((fxx + fyy) + 1j * (fxy - fyx))
        return -hermitian_to_real(-2.0 * ddbar) @ self.J

    def holomorphic_volume(self, x: np.ndarray) -> np.ndarray:
        raise UnsupportedModelError(f"{self.kind} has no trivial canonical bundle")

    def to_document(self) -> AmbientModelDocument:
        raise NotImplementedError


class FlatComplex(AmbientModel):
    kind = "flat_complex"
    curved = False

    def validate(self, x: np.ndarray) -> np.ndarray:
        x = super().validate(x)
        if np.abs(x).max(initial=0.0) > config.CHART_BOUND:
            raise DomainError(f"chart norm above {config.CHART_BOUND}")
        return x

    @property
    def has_holomorphic_volume(self) -> bool:
        return True

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        return np.broadcast_to(np.eye(self.dim_real), (x.shape[0], self.dim_real, self.dim_real)).copy()

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        return np.zeros((x.shape[0],) + (self.dim_real,) * 3)

    def ricci_form(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        return np.zeros((x.shape[0], self.dim_real, self.dim_real))

    def holomorphic_volume(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        return np.ones(x.shape[0], dtype=complex)

    def to_document(self) -> AmbientModelDocument:
        return AmbientModelDocument(kind=self.kind, params={"n": self.dim_complex})


class FlatTorus(FlatComplex):
    kind = "flat_torus"

    def __init__(self, dim_complex: int, lattice: Optional[Sequence[Sequence[float]]] = None):
        super().__init__(dim_complex)
        if lattice is None:
            basis = 2.0 * np.pi * np.eye(self.dim_real)
        else:
            basis = np.asarray(lattice, dtype=float)
        if basis.shape != (self.dim_real, self.dim_real) or abs(np.linalg.det(basis)) < 1e-12:
            raise ModelConfigurationError("lattice basis must be 2n independent vectors of length 2n")
        self._lattice = basis

    @property
    def lattice(self) -> np.ndarray:
        return self._lattice

    def validate(self, x: np.ndarray) -> np.ndarray:
        # periodic chart: any finite lift is admissible
        return AmbientModel.validate(self, x)

    def to_document(self) -> AmbientModelDocument:
        return AmbientModelDocument(
            kind=self.kind, params={"n": self.dim_complex, "lattice": self._lattice.tolist()}
        )


class ConformalSphere(AmbientModel):
    """Sphere of radius R in a stereographic chart, metric e^{2aP} * 4R^2 / (1 + |z|^2)^2.

    P(x3) = x3^2 with x3 the height of the unit-sphere point; a = 0 is the round sphere.
    The stereographic chart projects from the north pole, the antipodal chart w = 1/z
    from the south pole. P is even, so both charts share the metric formula.
    """

    kind = "conformal_sphere"

    def __init__(self, radius: float = 1.0, amplitude: float = 0.0, chart: str = "stereographic"):
        super().__init__(1)
        if radius <= 0:
            raise ModelConfigurationError(f"radius must be positive, got {radius}")
        if chart not in ("stereographic", "antipodal"):
            raise ModelConfigurationError(f"unknown sphere chart {chart!r}")
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        self.chart = chart

    def with_chart(self, chart: str) -> "ConformalSphere":
        return type(self)(self.radius, self.amplitude, chart)

    def validate(self, x: np.ndarray) -> np.ndarray:
        x = super().validate(x)
        if np.abs(x).max(initial=0.0) > config.CHART_BOUND:
            raise DomainError(f"chart norm above {config.CHART_BOUND}; use the antipodal chart")
        return x

    def _height(self, x: np.ndarray) -> np.ndarray:
        r2 = np.sum(x**2, axis=-1)
        height = (r2 - 1.0) / (r2 + 1.0)
        return height if self.chart == "stereographic" else -height

    def conformal_factor(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        r2 = np.sum(x**2, axis=-1)
        return 4.0 * self.radius**2 / (1.0 + r2) ** 2 * np.exp(2.0 * self.amplitude * self._height(x) ** 2)

    def log_factor_gradient(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        q = 1.0 + np.sum(x**2, axis=-1)
        height = self._height(x)
        sign = 1.0 if self.chart == "stereographic" else -1.0
        dheight = sign * 4.0 * x / q[:, None] ** 2
        return -4.0 * x / q[:, None] + 4.0 * self.amplitude * height[:, None] * dheight

    def metric(self, x: np.ndarray) -> np.ndarray:
        lam = self.conformal_factor(x)
        return lam[:, None, None] * np.eye(2)

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        lam = self.conformal_factor(x)
        grad = lam[:, None] * self.log_factor_gradient(x)
        return grad[:, :, None, None] * np.eye(2)

    def embed(self, x: np.ndarray):
        """Unit-sphere point u(x) and its Jacobian du/dx, shapes (m, 3) and (m, 3, 2)."""
        x = self.validate(x)
        a, b = x[:, 0], x[:, 1]
        q = 1.0 + a**2 + b**2
        u = np.stack([2 * a / q, 2 * b / q, (q - 2.0) / q], axis=-1)
        jac = np.empty((x.shape[0], 3, 2))
        jac[:, 0, 0] = 2 / q - 4 * a**2 / q**2
        jac[:, 0, 1] = -4 * a * b / q**2
        jac[:, 1, 0] = -4 * a * b / q**2
        jac[:, 1, 1] = 2 / q - 4 * b**2 / q**2
        jac[:, 2, 0] = 4 * a / q**2
        jac[:, 2, 1] = 4 * b / q**2
        if self.chart == "antipodal":
            flip = np.array([1.0, -1.0, -1.0])
            u = u * flip
            jac = jac * flip[:, None]
        return u, jac

    def chart_point(self, u: np.ndarray) -> np.ndarray:
        """Chart coordinates of unit-sphere points u of shape (m, 3)."""
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u, axis=-1, keepdims=True)
        if self.chart == "stereographic":
            denom = 1.0 - u[:, 2]
            return np.stack([u[:, 0] / denom, u[:, 1] / denom], axis=-1)
        denom = 1.0 + u[:, 2]
        return np.stack([u[:, 0] / denom, -u[:, 1] / denom], axis=-1)

    def to_document(self) -> AmbientModelDocument:
        params: Dict[str, Any] = {"radius": self.radius, "chart": self.chart}
        if self.kind == "football_sphere":
            params["amplitude"] = self.amplitude
        return AmbientModelDocument(kind=self.kind, params=params)


class RoundSphere(ConformalSphere):
    kind = "round_sphere"

    def __init__(self, radius: float = 1.0, amplitude: float = 0.0, chart: str = "stereographic"):
        super().__init__(radius, 0.0, chart)


class FootballSphere(ConformalSphere):
    kind = "football_sphere"


def antipodal_remap(x: np.ndarray) -> np.ndarray:
    """w = 1/z in real coordinates."""
    r2 = np.sum(x**2, axis=-1, keepdims=True)
    return np.stack([x[..., 0], -x[..., 1]], axis=-1) / r2


class PotentialKahler(AmbientModel):
    """Flat base with Kähler potential |z|^2 + epsilon * h, h a finite Fourier sum.

    h(x) = sum_m c_m cos(k_m . x + phase_m). Over a flat torus every k_m must lie in the
    dual lattice so that h descends to the torus.
    """

    kind = "potential_kahler"

    def __init__(self, base: FlatComplex, modes: Sequence[FourierModeSchema], epsilon: float):
        if not isinstance(base, FlatComplex):
            raise ModelConfigurationError("potential models need a flat_complex or flat_torus base")
        super().__init__(base.dim_complex)
        self.base = base
        self.modes = [m if isinstance(m, FourierModeSchema) else FourierModeSchema(**m) for m in modes]
        self.epsilon = float(epsilon)
        self.amplitudes = np.array([m.amplitude for m in self.modes], dtype=float)
        self.wave_vectors = np.array([m.wave_vector for m in self.modes], dtype=float).reshape(-1, self.dim_real)
        self.phases = np.array([m.phase for m in self.modes], dtype=float)
        self._check_periodic()
        self._check_positive()

    @property
    def curved(self) -> bool:
        return self.epsilon != 0.0 and len(self.modes) > 0

    @property
    def lattice(self) -> Optional[np.ndarray]:
        return self.base.lattice

    def _check_periodic(self):
        lattice = self.base.lattice
        if lattice is None or not len(self.modes):
            return
        windings = self.wave_vectors @ lattice.T / (2.0 * np.pi)
        if np.abs(windings - np.round(windings)).max() > 1e-9:
            raise ModelConfigurationError("perturbation modes are not periodic on the torus lattice")

    def _check_positive(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-np.pi, np.pi, size=(config.POSITIVITY_SAMPLES, self.dim_real))
        smallest = np.linalg.eigvalsh(self.metric(samples)).min()
        if smallest < config.POSITIVITY_FLOOR:
            raise ModelConfigurationError(
                f"epsilon={self.epsilon} breaks positivity (sampled eigenvalue {smallest:.3e})"
            )

    def validate(self, x: np.ndarray) -> np.ndarray:
        return self.base.validate(x)

    def _phases_at(self, x: np.ndarray) -> np.ndarray:
        return x @ self.wave_vectors.T + self.phases

    def potential(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        return np.cos(self._phases_at(x)) @ self.amplitudes

    def potential_gradient(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        return -(np.sin(self._phases_at(x)) * self.amplitudes) @ self.wave_vectors

    def potential_hessian(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        weights = -np.cos(self._phases_at(x)) * self.amplitudes
        return np.einsum("mq,qa,qb->mab", weights, self.wave_vectors, self.wave_vectors)

    def _metric_from_hessian(self, hess: np.ndarray) -> np.ndarray:
        n = self.dim_complex
        hxx, hxy = hess[..., :n, :n], hess[..., :n, n:]
        hyx, hyy = hess[..., n:, :n], hess[..., n:, n:]
        block = 0.25 * self.epsilon * ((hxx + hyy) + 1j * (hxy - hyx))
        return hermitian_to_real(block)

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        if not len(self.modes):
            return self.base.metric(x)
        return np.eye(self.dim_real) + self._metric_from_hessian(self.potential_hessian(x))

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        x = self.validate(x)
        if not len(self.modes):
            return self.base.metric_derivative(x)
        weights = np.sin(self._phases_at(x)) * self.amplitudes
        third = np.einsum("mq,ql,qa,qb->mlab", weights, self.wave_vectors, self.wave_vectors, self.wave_vectors)
        return self._metric_from_hessian(third)

    def ricci_form(self, x: np.ndarray) -> np.ndarray:
        if not self.curved:
            x = self.validate(x)
            return np.zeros((x.shape[0], self.dim_real, self.dim_real))
        return super().ricci_form(x)

    def to_document(self) -> AmbientModelDocument:
        return AmbientModelDocument(
            kind=self.kind,
            params={
                "base": self.base.to_document().model_dump(),
                "modes": [m.model_dump() for m in self.modes],
                "epsilon": self.epsilon,
            },
        )


def load_model(document: Union[Dict[str, Any], AmbientModelDocument]) -> AmbientModel:
    """Build a model from its JSON document."""
    if not isinstance(document, AmbientModelDocument):
        document = AmbientModelDocument(**document)
    params = document.params
    if document.kind == "flat_complex":
        return FlatComplex(FlatComplexParams(**params).n)
    if document.kind == "flat_torus":
        parsed = FlatTorusParams(**params)
        return FlatTorus(parsed.n, parsed.lattice)
    if document.kind == "round_sphere":
        parsed = SphereParams(**params)
        return RoundSphere(parsed.radius, chart=parsed.chart)
    if document.kind == "football_sphere":
        parsed = SphereParams(**params)
        return FootballSphere(parsed.radius, parsed.amplitude, parsed.chart)
    parsed = PotentialKahlerParams(**params)
    base = load_model(parsed.base)
    return PotentialKahler(base, parsed.modes, parsed.epsilon)


def _batch(model: AmbientModel, p: np.ndarray):
    p = np.asarray(p, dtype=float)
    return np.atleast_2d(p), p.ndim == 1


def metric_at(model: AmbientModel, p: np.ndarray) -> np.ndarray:
    x, single = _batch(model, p)
    g = model.metric(x)
    return g[0] if single else g


def symplectic_form_at(model: AmbientModel, p: np.ndarray) -> np.ndarray:
    x, single = _batch(model, p)
    w = model.symplectic(x)
    return w[0] if single else w


def christoffels_at(model: AmbientModel, p: np.ndarray) -> np.ndarray:
    x, single = _batch(model, p)
    gamma = model.christoffels(x)
    return gamma[0] if single else gamma


def ricci_form_at(model: AmbientModel, p: np.ndarray) -> np.ndarray:
    x, single = _batch(model, p)
    rho = model.ricci_form(x)
    return rho[0] if single else rho


def holomorphic_volume_at(model: AmbientModel, p: np.ndarray) -> Union[complex, np.ndarray]:
    if not model.has_holomorphic_volume:
        raise UnsupportedModelError(f"{model.kind} has no trivial canonical bundle")
    x, single = _batch(model, p)
    theta = model.holomorphic_volume(x)
    return complex(theta[0]) if single else theta


def einstein_ratio(model: AmbientModel, p: np.ndarray) -> np.ndarray:
    """Least-squares ratio rho / omega per point (the Kähler-Einstein constant when it is one)."""
    x, single = _batch(model, p)
    rho = model.ricci_form(x)
    omega = model.symplectic(x)
    ratio = np.einsum("mab,mab->m", rho, omega) / np.einsum("mab,mab->m", omega, omega)
    return ratio[0] if single else ratio


def exterior_derivative_residual(model: AmbientModel, p: np.ndarray, form: str = "symplectic") -> float:
    """Max |d(2-form)| on a central-difference stencil around each point."""
    x, _ = _batch(model, p)
    evaluate = model.symplectic if form == "symplectic" else model.ricci_form
    d = model.dim_real
    step = 1e-4
    grads = []
    for l in range(d):
        shift = np.zeros(d)
        shift[l] = step
        grads.append((evaluate(x + shift) - evaluate(x - shift)) / (2 * step))
    grads = np.stack(grads, axis=1)  # [m, l, a, b]
    worst = 0.0
    for a in range(d):
        for b in range(a + 1, d):
            for c in range(b + 1, d):
                cyclic = grads[:, a, b, c] + grads[:, b, c, a] + grads[:, c, a, b]
                worst = max(worst, float(np.abs(cyclic).max()))
    return worst
