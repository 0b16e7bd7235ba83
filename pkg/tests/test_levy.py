"""Driver families: symbols, closed-form densities, and their invariants."""

import math

import numpy as np
import pytest

from ldtsm.errors import DensityDomainError, NoClosedFormError
from ldtsm.levy import (
    CauchySpec,
    CompoundPoissonSpec,
    GammaSpec,
    GaussianSpec,
    StableSpec,
    closed_form_density,
    symbol,
)
from ldtsm.quadrature import adaptive_simpson, integrate_real_line

ALL_SPECS = [
    GaussianSpec(1.0),
    GaussianSpec(np.array([[2.0, 0.5], [0.5, 1.0]])),
    CauchySpec(theta=1.0),
    CauchySpec(theta=0.7, drift=0.3),
    StableSpec(alpha=1.5, theta=1.0),
    StableSpec(alpha=0.5, theta=2.0),
    GammaSpec(shape=1.0, rate=1.0),
    GammaSpec(shape=2.0, rate=1.5),
    CompoundPoissonSpec(marks=[1.0, -0.5], intensities=[2.0, 1.0]),
]


class TestSymbolValues:
    def test_gaussian_dim1(self):
        assert symbol(GaussianSpec(1.0))(2.0) == pytest.approx(2.0)

    def test_cauchy_driftless(self):
        assert symbol(CauchySpec(theta=1.0))(-3.0) == pytest.approx(3.0)

    def test_stable_alpha1_equals_cauchy(self):
        s = symbol(StableSpec(alpha=1.0, theta=1.0))
        c = symbol(CauchySpec(theta=1.0))
        assert s(2.0) == pytest.approx(2.0)
        assert s(2.0) == pytest.approx(c(2.0))

    def test_gamma_principal_branch(self):
        psi = symbol(GammaSpec(shape=2.0, rate=3.0))(1.5)
        expected = 2.0 * np.log(1.0 - 0.5j)
        np.testing.assert_allclose(psi, expected, rtol=1e-14)

    def test_compound_poisson(self):
        spec = CompoundPoissonSpec(marks=[1.0], intensities=[2.0])
        psi = symbol(spec)(np.pi)
        np.testing.assert_allclose(psi, 2.0 * (1.0 - np.exp(1j * np.pi)), rtol=1e-14)


class TestSymbolInvariants:
    """psi(0) = 0, Re psi >= 0, psi(-xi) = conj(psi(xi))."""

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family + str(s.dim))
    def test_invariants(self, spec):
        sym = symbol(spec)
        rng = np.random.default_rng(3)
        for _ in range(25):
            xi = rng.normal(scale=4.0, size=spec.dim)
            xi = xi if spec.dim > 1 else float(xi[0])
            plus = complex(np.asarray(sym(xi)).reshape(()))
            minus = complex(np.asarray(sym(-xi if spec.dim > 1 else -xi)).reshape(()))
            assert plus.real >= -1e-12
            np.testing.assert_allclose(minus, plus.conjugate(), atol=1e-12)
        zero = np.zeros(spec.dim) if spec.dim > 1 else 0.0
        assert complex(np.asarray(sym(zero)).reshape(())) == 0.0

    def test_symmetric_flag(self):
        assert symbol(GaussianSpec(1.0)).symmetric
        assert symbol(CauchySpec(theta=1.0)).symmetric
        assert not symbol(CauchySpec(theta=1.0, drift=0.5)).symmetric
        assert not symbol(GammaSpec(1.0, 1.0)).symmetric

    def test_characteristic_function_matches_density(self):
        """Int e^{i xi x} p(t, x) dx = e^{-t psi(xi)} at sampled (t, xi).

        The oscillatory Fourier integrals use scipy's weighted quadrature,
        an oracle independent of the package's own Simpson machinery.
        """
        from scipy.integrate import quad

        cases = [
            (GaussianSpec(1.0), 0.7, 1.3),
            (CauchySpec(theta=1.0), 1.5, 0.8),
            (GammaSpec(shape=1.5, rate=2.0), 1.0, 1.1),
        ]
        for spec, t, xi in cases:
            sym = symbol(spec)
            lo = 0.0
            re = quad(
                lambda x: spec.density(t, x), lo, np.inf, weight="cos", wvar=xi,
                limit=400,
            )[0]
            im = quad(
                lambda x: spec.density(t, x), lo, np.inf, weight="sin", wvar=xi,
                limit=400,
            )[0]
            if spec.symmetric_law:
                got = 2.0 * re + 0.0j  # even density: sine part cancels
            else:
                got = re + 1j * im  # one-sided gamma support
            expected = np.exp(-t * np.asarray(sym(xi)).reshape(()))
            np.testing.assert_allclose(got, expected, atol=1e-6)


class TestParameterValidation:
    def test_rejects_non_positive_definite_covariance(self):
        with pytest.raises(ValueError, match="positive definite"):
            GaussianSpec(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_asymmetric_covariance(self):
        with pytest.raises(ValueError, match="symmetric"):
            GaussianSpec(np.array([[1.0, 0.2], [0.0, 1.0]]))

    @pytest.mark.parametrize("alpha", [0.0, 2.0, -0.5, 2.5])
    def test_rejects_alpha_outside_open_interval(self, alpha):
        with pytest.raises(ValueError, match="alpha"):
            StableSpec(alpha=alpha, theta=1.0)

    def test_rejects_non_positive_scales(self):
        with pytest.raises(ValueError):
            CauchySpec(theta=0.0)
        with pytest.raises(ValueError):
            StableSpec(alpha=1.0, theta=-1.0)
        with pytest.raises(ValueError):
            GammaSpec(shape=0.0, rate=1.0)
        with pytest.raises(ValueError):
            GammaSpec(shape=1.0, rate=0.0)
        with pytest.raises(ValueError):
            CompoundPoissonSpec(marks=[1.0], intensities=[0.0])


class TestClosedFormDensity:
    def test_standard_normal_origin(self):
        got = closed_form_density(GaussianSpec(1.0), 1.0, 0.0)
        assert got == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=1e-12)

    def test_cauchy_origin(self):
        got = closed_form_density(CauchySpec(theta=1.0), 1.0, 0.0)
        assert got == pytest.approx(1.0 / math.pi, abs=1e-12)

    def test_gamma_unit_exponential(self):
        got = closed_form_density(GammaSpec(1.0, 1.0), 1.0, 2.0)
        assert got == pytest.approx(math.exp(-2.0), abs=1e-12)

    def test_stable_alpha1_uses_cauchy_form(self):
        got = closed_form_density(StableSpec(alpha=1.0, theta=2.0), 1.0, 0.5)
        want = closed_form_density(CauchySpec(theta=2.0), 1.0, 0.5)
        assert got == want

    def test_no_closed_form_paths(self):
        with pytest.raises(NoClosedFormError, match="density engine"):
            closed_form_density(StableSpec(alpha=1.5, theta=1.0), 1.0, 0.0)
        with pytest.raises(NoClosedFormError):
            closed_form_density(
                CompoundPoissonSpec(marks=[1.0], intensities=[1.0]), 1.0, 0.0
            )

    def test_gamma_boundary_rules(self):
        spec = GammaSpec(shape=1.0, rate=2.0)
        # shape * t = 1: exponential limit b at the origin
        assert spec.density(1.0, 0.0) == pytest.approx(2.0)
        # shape * t > 1: density vanishes at the origin
        assert spec.density(2.0, 0.0) == 0.0
        assert spec.density(1.0, -0.5) == 0.0
        with pytest.raises(DensityDomainError, match="diverges"):
            spec.density(0.5, 0.0)


class TestDensityNormalization:
    """Each closed-form density integrates to one (quadrature, 1e-8)."""

    @pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
    @pytest.mark.parametrize(
        "spec",
        [GaussianSpec(1.0), CauchySpec(theta=1.0), CauchySpec(theta=0.7, drift=0.3)],
        ids=["gaussian", "cauchy", "cauchy_drift"],
    )
    def test_real_line_families(self, spec, t):
        mass = integrate_real_line(lambda x: spec.density(t, x), rel_tol=1e-10)
        assert mass == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
    def test_gamma(self, t):
        spec = GammaSpec(shape=4.0, rate=1.5)  # shape * t >= 1 on all three
        mass = adaptive_simpson(lambda x: spec.density(t, x), 0.0, 80.0, rel_tol=1e-10)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_gamma_singular_origin(self):
        """shape * t < 1: the x = y^2 substitution removes the endpoint
        singularity and the mass is still one."""
        spec = GammaSpec(shape=2.0, rate=1.5)
        mass = adaptive_simpson(
            lambda y: spec.density(0.25, y * y) * 2.0 * y, 1e-150, 10.0,
            rel_tol=1e-10,
        )
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_multivariate_gaussian(self):
        spec = GaussianSpec(np.array([[2.0, 0.5], [0.5, 1.0]]))

        def outer(x1):
            return integrate_real_line(
                lambda x2: spec.density(1.0, np.array([x1, x2])), rel_tol=1e-9
            )

        mass = integrate_real_line(outer, rel_tol=1e-8)
        assert mass == pytest.approx(1.0, abs=1e-6)


class TestCauchySelfSimilarity:
    """p(ct, cx) = c^{-d} p(t, x) exactly for the driftless family."""

    @pytest.mark.parametrize("dim", [1, 2])
    def test_scaling(self, dim):
        spec = CauchySpec(theta=1.3, dimension=dim)
        rng = np.random.default_rng(11)
        for _ in range(20):
            t = float(rng.uniform(0.2, 3.0))
            c = float(rng.uniform(0.3, 4.0))
            x = rng.normal(size=dim)
            lhs = spec.density(c * t, c * x)
            rhs = c ** (-dim) * spec.density(t, x)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-13)
