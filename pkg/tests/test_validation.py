"""The statistical harness: martingale tests, oracles, audit reports."""

import math

import numpy as np
import pytest

from ldtsm.core import LambdaSchedule, LdtsmFactor, LdtsmModel
from ldtsm.hjm import GaussHjmModel, HoLee, InitialCurve, QtsmSpec, ShirakawaSpec, Vasicek
from ldtsm.levy import CauchySpec, GammaSpec, GaussianSpec, StableSpec
from ldtsm.validation import (
    conditional_martingale_test,
    default_suite,
    martingale_test,
    qtsm_audit,
    suite_passed,
    semigroup_oracle_test,
)

LAM1 = LambdaSchedule.constant(1.0)
N = 50_000
SEED = 777


def single(spec, z0=0.0):
    return LdtsmModel.single(LdtsmFactor(spec, LAM1, z0=z0))


class TestMartingale:
    def test_cauchy_reference_value(self):
        """E[p(1, Z_{0.5})] against p(1.5, 0) = 1/(1.5 pi)."""
        report = martingale_test(single(CauchySpec(theta=1.0)), 0.5, N, SEED)
        assert report.reference == pytest.approx(1.0 / (1.5 * math.pi), rel=1e-12)
        assert report.passed

    def test_gaussian_reference_value(self):
        report = martingale_test(single(GaussianSpec(1.0)), 1.0, N, SEED)
        assert report.reference == pytest.approx((4.0 * math.pi) ** -0.5, rel=1e-12)
        assert report.passed

    def test_gamma_at_half(self):
        report = martingale_test(single(GammaSpec(1.0, 1.0), z0=0.5), 1.0, N, SEED)
        assert report.reference == pytest.approx(0.5 * math.exp(-0.5), rel=1e-12)
        assert report.passed

    def test_tower_property_from_positive_time(self):
        report = martingale_test(single(GaussianSpec(1.0)), 1.0, N, SEED, t=0.25)
        assert report.reference == 0.0
        assert report.passed

    def test_multi_factor_product_density(self):
        model = LdtsmModel(
            factors=(
                LdtsmFactor(GaussianSpec(1.0), LAM1),
                LdtsmFactor(CauchySpec(theta=1.0), LAM1),
            )
        )
        report = martingale_test(model, 0.5, N, SEED)
        assert report.passed

    def test_hjm_and_jump_models(self):
        curve = InitialCurve.flat(0.03)
        assert martingale_test(
            GaussHjmModel(HoLee(0.02), curve), 1.0, N, SEED
        ).passed
        assert martingale_test(
            GaussHjmModel(Vasicek(0.02, 0.5), curve), 1.0, N, SEED
        ).passed
        assert martingale_test(QtsmSpec.constant(0.5), 1.0, N, SEED).passed
        shira = ShirakawaSpec(
            vol=Vasicek(0.02, 0.5),
            curve=curve,
            marks=[1.0],
            intensities=[2.0],
            jump_scale=[0.1],
            jump_decay=[0.5],
        )
        assert martingale_test(shira, 1.0, N, SEED).passed

    def test_unsupported_model_type(self):
        with pytest.raises(TypeError):
            martingale_test(object(), 1.0, 100, 1)


class TestConditionalMartingale:
    def test_gaussian_reference(self):
        factor = LdtsmFactor(GaussianSpec(1.0), LAM1)
        report = conditional_martingale_test(factor, 0.0, 0.5, 1.0, N, SEED)
        want = math.exp(-1.0 / 3.0) / math.sqrt(2.0 * math.pi * 1.5)
        assert report.reference == pytest.approx(want, rel=1e-12)
        assert report.passed

    def test_cauchy_reference(self):
        factor = LdtsmFactor(CauchySpec(theta=1.0), LAM1)
        report = conditional_martingale_test(factor, 0.0, 1.0, 2.0, N, SEED)
        assert report.reference == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-12)
        assert report.passed

    def test_gamma_at_coincidence_state(self):
        factor = LdtsmFactor(GammaSpec(1.0, 1.0), LAM1, z0=0.5)
        report = conditional_martingale_test(factor, 0.0, 1.0, 0.5, N, SEED)
        assert report.reference == pytest.approx(0.5 * math.exp(-0.5), rel=1e-12)
        assert report.passed

    def test_degenerate_case_flagged(self):
        factor = LdtsmFactor(GaussianSpec(1.0), LAM1)
        report = conditional_martingale_test(factor, 0.5, 0.5, 1.0, 100, SEED)
        assert report.details.get("degenerate_se")
        assert report.passed  # exact equality


class TestSemigroupOracle:
    @pytest.mark.parametrize(
        "factor,states",
        [
            (LdtsmFactor(GaussianSpec(1.0), LAM1), [-1.0, 0.0, 1.5]),
            (LdtsmFactor(CauchySpec(theta=1.0), LAM1), [-1.0, 0.0, 1.5]),
            (LdtsmFactor(GammaSpec(1.0, 1.0), LAM1, z0=0.5), [0.5, 1.0, 2.0]),
        ],
        ids=["gaussian", "cauchy", "gamma"],
    )
    def test_closed_form_families(self, factor, states):
        report = semigroup_oracle_test(factor, 0.0, 1.0, states)
        assert report.passed and report.rel_error <= 1e-6

    def test_stable_through_inversion(self):
        factor = LdtsmFactor(StableSpec(alpha=1.5, theta=1.0), LAM1)
        report = semigroup_oracle_test(
            factor, 0.0, 1.0, [-1.0, 0.0, 1.0], rel_tol=1e-4
        )
        assert report.passed

    def test_stable_alpha1_against_cauchy_closed_form(self):
        factor = LdtsmFactor(StableSpec(alpha=1.0, theta=1.0), LAM1)
        cauchy = CauchySpec(theta=1.0)
        lam_T = 1.0
        for z in (-1.0, 0.5):
            got = factor.density.at(lam_T + 1.0, z)
            assert got == pytest.approx(cauchy.density(2.0, z), abs=1e-6)


class TestQtsmAudit:
    def test_example_point(self):
        spec = QtsmSpec.constant(0.5)
        report = qtsm_audit(spec, [(np.array([1.0]), 0.0, 1.0)])
        assert report.passed
        row = report.details["points"][0]
        assert row["validated"] == pytest.approx(2.0**-0.5 * math.exp(0.25), rel=1e-10)
        assert row["plain"] == pytest.approx(2.0**-0.5 * math.e, rel=1e-10)
        assert report.details["plain_form_max_deviation"] > 0.5

    def test_origin_agrees(self):
        spec = QtsmSpec.constant(0.5)
        report = qtsm_audit(spec, [(np.array([0.0]), 0.0, 1.0)])
        assert report.details["plain_form_max_deviation"] <= 1e-10


class TestReports:
    def test_deterministic_given_seed_and_n(self):
        model = single(CauchySpec(theta=1.0))
        a = martingale_test(model, 0.5, 10_000, 31).to_dict()
        b = martingale_test(model, 0.5, 10_000, 31).to_dict()
        a.pop("wall_time")
        b.pop("wall_time")
        assert a == b

    def test_json_round_trip(self):
        import json

        report = martingale_test(single(GaussianSpec(1.0)), 1.0, 5_000, 3)
        parsed = json.loads(report.to_json())
        assert parsed["name"] == "martingale"
        assert isinstance(parsed["passed"], bool)

    def test_summary_line_shape(self):
        report = martingale_test(single(GaussianSpec(1.0)), 1.0, 5_000, 3)
        line = report.summary_line()
        assert line.startswith("[pass]") or line.startswith("[FAIL]")
        assert "martingale" in line


class TestDefaultSuite:
    def test_small_run_passes_everything(self):
        reports = default_suite(n_paths=20_000, seed=4242)
        assert suite_passed(reports)
        names = {r.name for r in reports}
        assert names == {
            "martingale",
            "conditional-martingale",
            "semigroup-oracle",
            "qtsm-exponent-audit",
        }
        # every family shows up in both martingale flavours
        mart = {r.model for r in reports if r.name == "martingale"}
        cond = {r.model for r in reports if r.name == "conditional-martingale"}
        for family in ("gaussian", "cauchy", "gamma", "stable"):
            assert any(family in m for m in mart)
            assert any(family in m for m in cond)
