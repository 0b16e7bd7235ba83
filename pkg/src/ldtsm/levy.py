"""Driver-process families: parameter specs, characteristic exponents, and
closed-form transition densities where they exist.

Every family is described by its characteristic exponent ("symbol") psi,
with E[exp(i <xi, Z_t>)] = exp(-t psi(xi)).  Gaussian, Cauchy and Gamma
processes additionally expose their transition density p(t, x) in closed
form; the symmetric alpha-stable family (alpha != 1) and compound Poisson
marks do not, and callers are pointed at the numerical inversion engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DensityDomainError, NoClosedFormError

__all__ = [
    "LevySpec",
    "GaussianSpec",
    "CauchySpec",
    "StableSpec",
    "GammaSpec",
    "CompoundPoissonSpec",
    "LevySymbol",
    "symbol",
    "closed_form_density",
    "closed_form_log_density",
    "has_closed_form",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class LevySymbol:
    """Evaluable characteristic exponent xi -> psi(xi) in C.

    For ``dim == 1`` the callable is vectorized over numpy arrays; for
    ``dim > 1`` it evaluates a single point of R^d.  ``re_bounded`` marks
    symbols whose real part does not grow (atomic laws, no density).
    ``symmetric`` marks real-valued symbols (distributions symmetric
    about the origin), for which psi(-xi) = psi(xi).
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    re_bounded: bool = False
    symmetric: bool = False

    def __call__(self, xi):
        return self.fn(xi)


class LevySpec:
    """Common interface of the driver-process parameter bundles."""

    family: str = "?"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def symbol_values(self, xi):
        """psi(xi); vectorized over arrays when dim == 1."""
        raise NotImplementedError

    @property
    def has_closed_form(self) -> bool:
        return False

    @property
    def symmetric_law(self) -> bool:
        return False

    def log_density(self, t: float, x) -> float:
        raise NoClosedFormError(
            f"{self.family}: no closed form; use the density engine"
        )

    def density(self, t: float, x) -> float:
        return math.exp(self.log_density(t, x))


def _as_matrix(value, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(value, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    return m


@dataclass(frozen=True, eq=False)
class GaussianSpec(LevySpec):
    """Brownian motion with covariance rate Sigma (d x d, SPD).

    Symbol psi(xi) = 0.5 <Sigma xi, xi>; density of Z_t is N(0, Sigma t):
    p(t, x) = (2 pi t)^{-d/2} det(Sigma)^{-1/2} exp(-<Sigma^{-1} x, x>/(2t)).
    """

    covariance: np.ndarray

    family = "gaussian"

    def __post_init__(self):
        sigma = _as_matrix(self.covariance, "covariance")
        if not np.allclose(sigma, sigma.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        object.__setattr__(self, "covariance", sigma)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_inv", np.linalg.inv(sigma))
        object.__setattr__(self, "_logdet", 2.0 * np.log(np.diag(chol)).sum())

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        return self._chol

    @property
    def has_closed_form(self) -> bool:
        return True

    @property
    def symmetric_law(self) -> bool:
        return True

    def symbol_values(self, xi):
        if self.dim == 1:
            xi = np.asarray(xi, dtype=float)
            return (0.5 * self.covariance[0, 0] * xi * xi).astype(complex)
        xi = np.asarray(xi, dtype=float)
        return complex(0.5 * xi @ self.covariance @ xi)

    def log_density(self, t: float, x) -> float:
        if t <= 0.0:
            raise DensityDomainError("time must be positive")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = self.dim
        quad = float(x @ self._inv @ x)
        return -0.5 * (d * (_LOG_2PI + math.log(t)) + self._logdet + quad / t)


@dataclass(frozen=True, eq=False)
class CauchySpec(LevySpec):
    """Isotropic Cauchy process with scale theta > 0 and drift gamma in R^d.

    Symbol psi(xi) = theta |xi| - i <xi, gamma>; density of Z_t:
    p(t, x) = Gamma((d+1)/2) theta t / (pi (theta^2 t^2 + |x - t gamma|^2))^{(d+1)/2}.
    """

    theta: float
    drift: np.ndarray = 0.0
    dimension: int = 1

    family = "cauchy"

    def __post_init__(self):
        if self.theta <= 0.0:
            raise ValueError("theta must be positive")
        gamma = np.atleast_1d(np.asarray(self.drift, dtype=float))
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if gamma.size == 1 and self.dimension > 1:
            gamma = np.full(self.dimension, float(gamma[0]))
        if gamma.size != self.dimension:
            raise ValueError("drift length must match dimension")
        object.__setattr__(self, "drift", gamma)

    @property
    def dim(self) -> int:
        return self.dimension

    @property
    def has_closed_form(self) -> bool:
        return True

    @property
    def symmetric_law(self) -> bool:
        return bool(np.all(self.drift == 0.0))

    def symbol_values(self, xi):
        if self.dim == 1:
            xi = np.asarray(xi, dtype=float)
            return self.theta * np.abs(xi) - 1j * xi * self.drift[0]
        xi = np.asarray(xi, dtype=float)
        return complex(
            self.theta * np.linalg.norm(xi) - 1j * float(xi @ self.drift)
        )

    def log_density(self, t: float, x) -> float:
        if t <= 0.0:
            raise DensityDomainError("time must be positive")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = self.dim
        r2 = float(np.sum((x - t * self.drift) ** 2))
        half = 0.5 * (d + 1)
        return (
            math.lgamma(half)
            + math.log(self.theta * t)
            - half * (math.log(math.pi) + math.log(self.theta**2 * t**2 + r2))
        )


@dataclass(frozen=True, eq=False)
class StableSpec(LevySpec):
    """Symmetric alpha-stable process, d = 1: psi(xi) = theta |xi|^alpha.

    Heavy tails, no moments of order >= alpha.  Only alpha = 1 (a driftless
    Cauchy process) has a closed-form density; anything else goes through
    the Fourier inversion engine.
    """

    alpha: float
    theta: float

    family = "stable"

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if self.theta <= 0.0:
            raise ValueError("theta must be positive")

    @property
    def dim(self) -> int:
        return 1

    @property
    def has_closed_form(self) -> bool:
        return self.alpha == 1.0

    @property
    def symmetric_law(self) -> bool:
        return True

    def symbol_values(self, xi):
        xi = np.asarray(xi, dtype=float)
        return (self.theta * np.abs(xi) ** self.alpha).astype(complex)

    def log_density(self, t: float, x) -> float:
        if self.alpha != 1.0:
            raise NoClosedFormError(
                "stable density with alpha != 1 has no closed form; "
                "use the density engine"
            )
        return CauchySpec(theta=self.theta).log_density(t, x)


@dataclass(frozen=True, eq=False)
class GammaSpec(LevySpec):
    """Gamma subordinator with shape rate a > 0 and inverse scale b > 0.

    Z_t ~ Gamma(a t, b): p(t, x) = b^{at} / Gamma(at) x^{at-1} e^{-bx} on
    x > 0.  At x = 0 the density is b when a t = 1 (exponential limit),
    0 when a t > 1, and divergent when a t < 1, in which case evaluation
    raises instead of returning infinity.
    """

    shape: float
    rate: float

    family = "gamma"

    def __post_init__(self):
        if self.shape <= 0.0 or self.rate <= 0.0:
            raise ValueError("shape and rate must be positive")

    @property
    def dim(self) -> int:
        return 1

    @property
    def has_closed_form(self) -> bool:
        return True

    def symbol_values(self, xi):
        # principal branch; 1 - i xi / b never touches the cut since b > 0
        xi = np.asarray(xi, dtype=float)
        return self.shape * np.log(1.0 - 1j * xi / self.rate)

    def log_density(self, t: float, x) -> float:
        if t <= 0.0:
            raise DensityDomainError("time must be positive")
        x = float(np.asarray(x, dtype=float).reshape(()))
        at = self.shape * t
        if x < 0.0:
            return -math.inf
        if x == 0.0:
            if at == 1.0:
                return math.log(self.rate)
            if at > 1.0:
                return -math.inf
            raise DensityDomainError(
                f"gamma density diverges at x=0 for shape*t={at} < 1"
            )
        return (
            at * math.log(self.rate)
            - math.lgamma(at)
            + (at - 1.0) * math.log(x)
            - self.rate * x
        )

    def density(self, t: float, x) -> float:
        logp = self.log_density(t, x)
        return 0.0 if logp == -math.inf else math.exp(logp)


@dataclass(frozen=True, eq=False)
class CompoundPoissonSpec(LevySpec):
    """Compound Poisson process over a finite mark set.

    Marks x_1..x_m with intensities nu_j > 0; psi(xi) =
    sum_j nu_j (1 - exp(i xi x_j)).  The law of Z_t is atomic, so there is
    no transition density and the inversion engine rejects this family.
    """

    marks: np.ndarray
    intensities: np.ndarray

    family = "compound_poisson"

    def __post_init__(self):
        marks = np.atleast_1d(np.asarray(self.marks, dtype=float))
        nu = np.atleast_1d(np.asarray(self.intensities, dtype=float))
        if marks.size < 1:
            raise ValueError("at least one mark is required")
        if marks.size != nu.size:
            raise ValueError("marks and intensities must have equal length")
        if np.any(nu <= 0.0):
            raise ValueError("intensities must be positive")
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "intensities", nu)

    @property
    def dim(self) -> int:
        return 1

    def symbol_values(self, xi):
        xi = np.asarray(xi, dtype=float)
        acc = np.zeros(np.shape(xi), dtype=complex)
        for x_j, nu_j in zip(self.marks, self.intensities):
            acc = acc + nu_j * (1.0 - np.exp(1j * xi * x_j))
        return acc


def symbol(spec: LevySpec) -> LevySymbol:
    """Characteristic exponent of ``spec``, as an evaluable object.

    The returned symbol satisfies psi(0) = 0, Re psi >= 0 and the Hermitian
    symmetry psi(-xi) = conj(psi(xi)); the law of Z_t has characteristic
    function exp(-t psi(xi)).
    """
    return LevySymbol(
        dim=spec.dim,
        fn=spec.symbol_values,
        re_bounded=isinstance(spec, CompoundPoissonSpec),
        symmetric=spec.symmetric_law,
    )


def has_closed_form(spec: LevySpec) -> bool:
    return spec.has_closed_form


def closed_form_density(spec: LevySpec, t: float, x) -> float:
    """p(t, x) by the family's closed form.

    Raises NoClosedFormError for families without one (stable with
    alpha != 1, compound Poisson) and DensityDomainError where the density
    diverges (gamma at x = 0 with shape*t < 1).
    """
    return spec.density(t, x)


def closed_form_log_density(spec: LevySpec, t: float, x) -> float:
    """log p(t, x); -inf outside the support."""
    return spec.log_density(t, x)
