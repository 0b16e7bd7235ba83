"""Path generation: exact increment laws, seeding, Poisson measure."""

import math

import numpy as np
import pytest
from scipy import stats

from ldtsm.core import LambdaSchedule, LdtsmFactor, LdtsmModel
from ldtsm.errors import GridError
from ldtsm.levy import (
    CauchySpec,
    CompoundPoissonSpec,
    GammaSpec,
    GaussianSpec,
    StableSpec,
)
from ldtsm.simulation import (
    PathGrid,
    brownian_path,
    map_indexed,
    path_rng,
    sample_increments,
    simulate,
    simulate_poisson_measure,
)

KS_LEVEL = 0.01  # tests must sit above the 1% level


class TestPathGrid:
    def test_nodes(self):
        grid = PathGrid(horizon=1.0, step=0.25)
        np.testing.assert_allclose(grid.times(), [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_step_must_divide_horizon(self):
        with pytest.raises(GridError, match="divide"):
            PathGrid(horizon=1.0, step=0.3)
        with pytest.raises(GridError):
            PathGrid(horizon=1.0, step=-0.1)


class TestReproducibility:
    def test_same_arguments_bit_identical(self):
        grid = PathGrid(1.0, 0.01)
        model = LdtsmModel(
            factors=(
                LdtsmFactor(GaussianSpec(1.0), LambdaSchedule.constant(1.0)),
                LdtsmFactor(
                    GammaSpec(1.0, 1.0), LambdaSchedule.constant(1.0), z0=0.5
                ),
            )
        )
        a = simulate(model, grid, 42, 7)
        b = simulate(model, grid, 42, 7)
        for sa, sb in zip(a.states, b.states):
            assert np.array_equal(sa, sb)

    def test_worker_count_does_not_change_results(self):
        grid = PathGrid(1.0, 0.05)

        def run(k):
            return simulate(GaussianSpec(1.0), grid, 99, k).states[0][-1]

        serial = map_indexed(run, 64, workers=1)
        threaded = map_indexed(run, 64, workers=8)
        assert serial == threaded

    def test_distinct_paths_differ(self):
        grid = PathGrid(1.0, 0.05)
        a = simulate(GaussianSpec(1.0), grid, 42, 0).states[0]
        b = simulate(GaussianSpec(1.0), grid, 42, 1).states[0]
        assert not np.array_equal(a, b)


class TestIncrementLaws:
    def test_gaussian_moments(self):
        """Mean and variance of Z_1 within three standard errors."""
        n = 100_000
        z = sample_increments(GaussianSpec(1.0), 1.0, n, path_rng(123, 0))
        assert abs(z.mean()) <= 3.0 / math.sqrt(n)
        # SE of the sample variance of a normal: sqrt(2/n)
        assert abs(z.var() - 1.0) <= 3.0 * math.sqrt(2.0 / n)

    def test_gamma_paths_nondecreasing(self):
        path = simulate(GammaSpec(1.0, 1.0), PathGrid(1.0, 0.01), 11, 3)
        assert np.all(np.diff(path.states[0]) >= 0.0)

    def test_cauchy_against_closed_form_cdf(self):
        z = sample_increments(CauchySpec(theta=1.0), 1.0, 10_000, path_rng(5, 0))
        res = stats.kstest(z, lambda x: 0.5 + np.arctan(x) / np.pi)
        assert res.pvalue > KS_LEVEL

    def test_cauchy_drift_shifts_location(self):
        z = sample_increments(
            CauchySpec(theta=1.0, drift=2.0), 1.0, 10_000, path_rng(6, 0)
        )
        res = stats.kstest(z, lambda x: 0.5 + np.arctan(x - 2.0) / np.pi)
        assert res.pvalue > KS_LEVEL

    def test_multivariate_cauchy_is_isotropic(self):
        """Each coordinate of an isotropic Cauchy vector is Cauchy."""
        z = sample_increments(
            CauchySpec(theta=1.0, dimension=2), 1.0, 10_000, path_rng(7, 0)
        )
        res = stats.kstest(z[:, 0], lambda x: 0.5 + np.arctan(x) / np.pi)
        assert res.pvalue > KS_LEVEL

    def test_stable_matches_reference_distribution(self):
        z = sample_increments(StableSpec(1.5, 1.0), 1.0, 8_000, path_rng(8, 0))
        ref = stats.levy_stable(alpha=1.5, beta=0.0, scale=1.0)
        res = stats.kstest(z, ref.cdf)
        assert res.pvalue > KS_LEVEL

    @pytest.mark.parametrize(
        "spec",
        [GaussianSpec(1.0), CauchySpec(theta=1.0), GammaSpec(1.0, 1.0)],
        ids=["gaussian", "cauchy", "gamma"],
    )
    def test_semigroup_one_step_vs_hundred(self, spec):
        """Z_1 from one exact draw vs the sum of 100 exact steps."""
        n = 8_000
        one = sample_increments(spec, 1.0, n, path_rng(9, 0))
        steps = sample_increments(spec, 0.01, n * 100, path_rng(9, 1))
        hundred = steps.reshape(n, 100).sum(axis=1)
        res = stats.ks_2samp(one, hundred)
        assert res.pvalue > KS_LEVEL

    def test_stable_alpha1_scaling(self):
        """Z_{ct} and c Z_t share the law for the index-one stable process."""
        c = 2.0
        a = sample_increments(StableSpec(1.0, 1.0), c * 1.0, 8_000, path_rng(21, 0))
        b = c * sample_increments(StableSpec(1.0, 1.0), 1.0, 8_000, path_rng(22, 0))
        assert stats.ks_2samp(a, b).pvalue > KS_LEVEL


class TestPoissonMeasure:
    def test_mean_count(self):
        counts = [
            len(simulate_poisson_measure([1.0], [2.0], 1.0, path_rng(1, k)))
            for k in range(20_000)
        ]
        counts = np.array(counts)
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - 2.0) <= 3.0 * se

    def test_zero_intensity_gives_empty_record(self):
        assert simulate_poisson_measure([1.0], [0.0], 1.0, path_rng(1, 0)) == []

    def test_two_marks_uncorrelated(self):
        n = 20_000
        pairs = np.array(
            [
                [
                    sum(1 for _, j in ev if j == 0),
                    sum(1 for _, j in ev if j == 1),
                ]
                for ev in (
                    simulate_poisson_measure(
                        [1.0, -0.5], [2.0, 1.0], 1.0, path_rng(2, k)
                    )
                    for k in range(n)
                )
            ]
        )
        corr = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
        assert abs(corr) <= 3.0 / math.sqrt(n)

    def test_disjoint_interval_counts_poisson(self):
        """Counts over (0, 0.5] are Poisson(nu/2): mean matches variance."""
        n = 20_000
        counts = np.array(
            [
                sum(
                    1
                    for s, _ in simulate_poisson_measure(
                        [1.0], [2.0], 1.0, path_rng(3, k)
                    )
                    if s <= 0.5
                )
                for k in range(n)
            ]
        )
        assert abs(counts.mean() - 1.0) <= 3.0 * counts.std(ddof=1) / math.sqrt(n)
        assert abs(counts.var() - counts.mean()) <= 0.05

    def test_times_sorted_within_horizon(self):
        ev = simulate_poisson_measure([1.0, 2.0], [3.0, 1.0], 2.0, path_rng(4, 0))
        times = [s for s, _ in ev]
        assert times == sorted(times)
        assert all(0.0 <= s <= 2.0 for s in times)


class TestCompoundPoissonPaths:
    def test_states_follow_event_record(self):
        spec = CompoundPoissonSpec(marks=[1.0, -0.5], intensities=[2.0, 1.0])
        grid = PathGrid(1.0, 0.25)
        path = simulate(spec, grid, 13, 2)
        events = path.jumps[0]
        times = grid.times()
        for i, t in enumerate(times):
            expected = sum(
                spec.marks[j] for s, j in events if s <= t + 1e-12
            )
            assert path.states[0][i] == pytest.approx(expected, abs=1e-12)


class TestBrownianPath:
    def test_starts_at_origin_and_scales(self):
        path = brownian_path(PathGrid(1.0, 0.01), 5, 0)
        assert path.values[0] == 0.0
        n = 50_000
        finals = np.array(
            [
                brownian_path(PathGrid(1.0, 0.25), 5, k).values[-1]
                for k in range(2_000)
            ]
        )
        assert abs(finals.var() - 1.0) <= 3.0 * math.sqrt(2.0 / 2_000)
        del n
