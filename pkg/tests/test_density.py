"""Inversion engine and convolution oracle."""

import math

import numpy as np
import pytest

from ldtsm.density import (
    ClosedFormDensity,
    InversionGrid,
    InvertedDensity,
    auto_grid,
    convolve_oracle,
    invert,
    refinement_gap,
    required_cutoff,
)
from ldtsm.errors import (
    AtomicDistributionError,
    CutoffError,
    GridError,
    QuadratureError,
)
from ldtsm.levy import (
    CauchySpec,
    CompoundPoissonSpec,
    GammaSpec,
    GaussianSpec,
    StableSpec,
    symbol,
)
from ldtsm.quadrature import adaptive_simpson


class TestInversionGrid:
    def test_derived_quantities(self):
        grid = InversionGrid(cutoff=64.0, n_nodes=2**12)
        assert grid.freq_step == pytest.approx(2 * 64.0 / 2**12)
        assert grid.space_step == pytest.approx(math.pi / 64.0)
        assert grid.window == pytest.approx(0.5 * 2**12 * math.pi / 64.0)
        assert grid.frequencies().size == 2**12
        assert grid.frequencies()[2**11] == 0.0

    def test_rejects_bad_parameters(self):
        with pytest.raises(GridError):
            InversionGrid(cutoff=-1.0, n_nodes=2**12)
        with pytest.raises(GridError):
            InversionGrid(cutoff=10.0, n_nodes=2**9)  # below 2**10
        with pytest.raises(GridError):
            InversionGrid(cutoff=10.0, n_nodes=3000)  # not a power of two


class TestRequiredCutoff:
    def test_gaussian(self):
        xi = required_cutoff(symbol(GaussianSpec(1.0)), 1.0, 1e-12)
        assert xi == pytest.approx(math.sqrt(2.0 * math.log(1e12)), rel=1e-4)

    def test_stable_alpha1(self):
        xi = required_cutoff(symbol(StableSpec(1.0, 1.0)), 1.0, 1e-12)
        assert xi == pytest.approx(math.log(1e12), rel=1e-4)

    def test_small_time_blowup(self):
        """alpha = 0.5 at t = 0.01 needs a cutoff near (100 ln 1e12)^2."""
        xi = required_cutoff(symbol(StableSpec(0.5, 1.0)), 0.01, 1e-12)
        assert xi == pytest.approx((100.0 * math.log(1e12)) ** 2, rel=1e-3)

    def test_compound_poisson_is_atomic(self):
        sym = symbol(CompoundPoissonSpec(marks=[1.0], intensities=[2.0]))
        with pytest.raises(AtomicDistributionError, match="atomic"):
            required_cutoff(sym, 1.0, 1e-12)


class TestInvert:
    def test_stable1_matches_cauchy_at_origin(self):
        sym = symbol(StableSpec(alpha=1.0, theta=1.0))
        ev = invert(sym, 1.0, auto_grid(sym, 1.0, window_min=4000.0))
        assert ev.at(1.0, 0.0) == pytest.approx(1.0 / math.pi, abs=1e-6)

    def test_gaussian_t2(self):
        sym = symbol(GaussianSpec(1.0))
        ev = invert(sym, 2.0, auto_grid(sym, 1.0))
        want = (4.0 * math.pi) ** -0.5 * math.exp(-0.25)
        assert ev.at(2.0, 1.0) == pytest.approx(want, abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_normalization_within_1e4(self, alpha):
        sym = symbol(StableSpec(alpha=alpha, theta=1.0))
        ev = invert(sym, 1.0, auto_grid(sym, 1.0, window_min=1024.0))
        assert ev.window_mass(1.0) == pytest.approx(1.0, abs=1e-4)

    def test_cutoff_insufficient_error_carries_estimate(self):
        sym = symbol(StableSpec(alpha=0.5, theta=1.0))
        grid = InversionGrid(cutoff=32.0, n_nodes=2**10)
        with pytest.raises(CutoffError) as err:
            invert(sym, 0.05, grid)
        need = required_cutoff(sym, 0.05, 1e-12)
        assert err.value.required_cutoff == pytest.approx(need, rel=1e-6)

    def test_multidimensional_rejected(self):
        sym = symbol(GaussianSpec(np.eye(2)))
        with pytest.raises(GridError, match="dim == 1"):
            invert(sym, 1.0, InversionGrid(cutoff=32.0, n_nodes=2**10))

    def test_outside_query_window_is_zero(self):
        sym = symbol(StableSpec(alpha=1.5, theta=1.0))
        ev = invert(sym, 1.0, auto_grid(sym, 1.0), query_window=16.0)
        assert ev.at(1.0, 400.0) == 0.0

    def test_clamp_diagnostic_small(self):
        sym = symbol(GaussianSpec(1.0))
        ev = invert(sym, 1.0, auto_grid(sym, 1.0))
        assert 0.0 <= ev.max_clamp(1.0) <= 1e-10


class TestInversionAgainstClosedForms:
    """sup_x |inverted - closed| <= 1e-6 on [-10, 10], t in {0.5, 1, 2}."""

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_gaussian(self, t):
        spec = GaussianSpec(1.0)
        sym = symbol(spec)
        ev = invert(sym, t, auto_grid(sym, 0.5), query_window=16.0)
        xs = np.linspace(-10.0, 10.0, 801)
        ref = ClosedFormDensity(spec).at_batch(t, xs)
        assert np.max(np.abs(ev.at(t, xs) - ref)) <= 1e-6

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_cauchy(self, t):
        spec = CauchySpec(theta=1.0)
        sym = symbol(spec)
        ev = invert(sym, t, auto_grid(sym, 0.5, window_min=4000.0), query_window=16.0)
        xs = np.linspace(-10.0, 10.0, 801)
        ref = ClosedFormDensity(spec).at_batch(t, xs)
        assert np.max(np.abs(ev.at(t, xs) - ref)) <= 1e-6

    def test_even_in_x_for_symmetric_symbols(self):
        sym = symbol(StableSpec(alpha=1.5, theta=1.0))
        ev = invert(sym, 1.0, auto_grid(sym, 1.0))
        xs = np.linspace(0.0, 20.0, 401)
        assert np.max(np.abs(ev.at(1.0, xs) - ev.at(1.0, -xs))) <= 1e-10

    def test_refinement_agreement(self):
        """Doubling the grid moves a smooth density by less than 1e-8.

        The window must be wide enough that tail aliasing sits below the
        agreement target in the first place.
        """
        sym = symbol(StableSpec(alpha=1.5, theta=1.0))
        grid = auto_grid(sym, 1.0, window_min=2048.0)
        probe = np.linspace(-8.0, 8.0, 101)
        assert refinement_gap(sym, 1.0, grid, probe) <= 1e-8


class TestConvolveOracle:
    def test_gaussian_semigroup(self):
        f = ClosedFormDensity(GaussianSpec(1.0))
        got = convolve_oracle(f, 1.0, f, 1.0, 0.0)
        assert got == pytest.approx((4.0 * math.pi) ** -0.5, rel=1e-8)

    def test_cauchy_semigroup(self):
        f = ClosedFormDensity(CauchySpec(theta=1.0))
        got = convolve_oracle(f, 1.0, f, 0.5, 0.0)
        assert got == pytest.approx(1.0 / (1.5 * math.pi), rel=1e-8)

    def test_gamma_semigroup(self):
        f = ClosedFormDensity(GammaSpec(1.0, 1.0))
        got = convolve_oracle(f, 1.0, f, 1.0, 2.0)
        assert got == pytest.approx(2.0 * math.exp(-2.0), rel=1e-8)

    @pytest.mark.parametrize(
        "spec,times,xs",
        [
            (GaussianSpec(1.0), (0.5, 1.25), np.linspace(-3, 3, 5)),
            (CauchySpec(theta=1.0), (0.75, 1.0), np.linspace(-3, 3, 5)),
            (CauchySpec(theta=0.7, drift=0.4), (0.75, 1.0), np.linspace(-3, 3, 5)),
            (GammaSpec(1.0, 1.0), (1.0, 1.5), np.array([0.5, 1.0, 2.0, 3.0])),
            (GammaSpec(2.0, 1.5), (0.6, 0.9), np.array([0.5, 1.0, 2.0, 3.0])),
        ],
        ids=["gaussian", "cauchy", "cauchy_drift", "gamma", "gamma_a2"],
    )
    def test_chapman_kolmogorov_across_families(self, spec, times, xs):
        """(p(s,.) * p(u,.))(x) = p(s+u, x) to relative 1e-6."""
        f = ClosedFormDensity(spec)
        s, u = times
        for x in xs:
            got = convolve_oracle(f, s, f, u, x)
            want = spec.density(s + u, float(x))
            assert got == pytest.approx(want, rel=1e-6)

    def test_inverted_evaluators_convolve(self):
        spec = StableSpec(alpha=1.5, theta=1.0)
        sym = symbol(spec)
        ev = InvertedDensity(symbol=sym, grid=auto_grid(sym, 0.75, window_min=1024.0))
        got = convolve_oracle(ev, 1.0, ev, 0.75, 0.5, rel_tol=1e-8)
        want = ev.at(1.75, 0.5)
        assert got == pytest.approx(want, rel=1e-4)

    def test_two_dimensional_gaussian(self):
        f = ClosedFormDensity(GaussianSpec(np.eye(2)))
        got = convolve_oracle(f, 1.0, f, 1.0, np.array([0.5, -0.25]), rel_tol=1e-7)
        want = GaussianSpec(np.eye(2)).density(2.0, np.array([0.5, -0.25]))
        assert got == pytest.approx(want, rel=1e-6)

    def test_dimension_mismatch(self):
        f1 = ClosedFormDensity(GaussianSpec(1.0))
        f2 = ClosedFormDensity(GaussianSpec(np.eye(2)))
        with pytest.raises(ValueError, match="dimensions differ"):
            convolve_oracle(f1, 1.0, f2, 1.0, 0.0)


class TestQuadratureBudget:
    def test_exhaustion_carries_estimate_and_bound(self):
        # a needle the budget cannot resolve
        def needle(x):
            return 1.0 / (1e-14 + (x - 0.123456) ** 2)

        with pytest.raises(QuadratureError) as err:
            adaptive_simpson(needle, 0.0, 1.0, rel_tol=1e-14, max_evals=2_000)
        assert math.isfinite(err.value.estimate)
        assert err.value.error_bound >= 0.0
