"""Statistical and quadrature checks of the pricing identities.

Monte Carlo tests verify the state-price-density (martingale) property
E[pi_T] = pi_0 P_0^T for every model class and its conditional, pointwise
version for the density-ratio factors; quadrature tests verify the
semigroup identity behind the density-ratio construction and audit the
quadratic Gaussian exponent.  MC verdicts use a three-standard-error band;
on a miss the test reruns once with a derived seed and fails hard on a
second miss, which bounds the flake probability below 1e-5 per test.

Heavy-tailed drivers are fine here: the sampled functional is a bounded
density value, so plain Monte Carlo applies even when the state itself
has no finite moments of the relevant order.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    LambdaSchedule,
    LdtsmFactor,
    LdtsmModel,
    log_bond_price,
)
from .density import LOG_FLOOR, convolve_oracle
from .hjm import (
    GaussHjmModel,
    QtsmSpec,
    ShirakawaSpec,
    qtsm_bond,
    qtsm_oracle,
)
from .levy import (
    CauchySpec,
    GammaSpec,
    GaussianSpec,
    StableSpec,
)
from .simulation import PathGrid, path_rng, sample_increments

__all__ = [
    "ValidationReport",
    "martingale_test",
    "conditional_martingale_test",
    "semigroup_oracle_test",
    "qtsm_audit",
    "default_suite",
    "suite_passed",
]

Z_BAND = 3.0


@dataclass
class ValidationReport:
    """Outcome of one statistical or deterministic check."""

    name: str
    model: str
    kind: str  # "mc" or "deterministic"
    estimate: float
    reference: float
    std_error: float | None = None
    z_score: float | None = None
    rel_error: float | None = None
    tolerance: float | None = None
    passed: bool = False
    seed: int | None = None
    n_samples: int | None = None
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "model": self.model,
            "kind": self.kind,
            "estimate": self.estimate,
            "reference": self.reference,
            "std_error": self.std_error,
            "z_score": self.z_score,
            "rel_error": self.rel_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "wall_time": self.wall_time,
        }
        out.update(self.details)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def summary_line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        if self.kind == "mc":
            gauge = f"z={self.z_score:+.2f}" if self.z_score is not None else "z=n/a"
        else:
            gauge = f"rel={self.rel_error:.2e}"
        return (
            f"[{verdict}] {self.name:<38} {self.model:<28} "
            f"est={self.estimate:.7g} ref={self.reference:.7g} {gauge}"
        )


def _mc_report(
    name: str,
    model: str,
    samples: np.ndarray,
    reference: float,
    seed: int,
    started: float,
    details: dict | None = None,
) -> ValidationReport:
    n = samples.size
    estimate = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    details = dict(details or {})
    if se == 0.0:
        details["degenerate_se"] = True
        z = 0.0 if estimate == reference else math.inf
    else:
        z = (estimate - reference) / se
    return ValidationReport(
        name=name,
        model=model,
        kind="mc",
        estimate=estimate,
        reference=reference,
        std_error=se,
        z_score=z,
        passed=abs(z) <= Z_BAND,
        seed=seed,
        n_samples=n,
        wall_time=time.perf_counter() - started,
        details=details,
    )


def _ldtsm_log_spd_samples(
    model: LdtsmModel, t: float, n: int, seed: int, stream_base: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """(log pi_t samples, per-factor states) for states simulated from z0.

    One exact increment per factor: the path grid is irrelevant for the
    terminal law of a process with stationary independent increments.
    """
    log_pi = np.zeros(n)
    states = []
    for l, f in enumerate(model.factors):
        rng = path_rng(seed, 0, stream=stream_base + l)
        z_t = np.asarray(f.z0, dtype=float) + sample_increments(f.spec, t, n, rng)
        lam = f.schedule(t)
        log_pi += np.log(np.maximum(f.density.at_batch(lam, z_t), LOG_FLOOR))
        states.append(z_t)
    return log_pi, np.array(states)


def _ldtsm_martingale(
    model: LdtsmModel, T: float, n: int, seed: int, t: float
) -> tuple[np.ndarray, float, str]:
    label = "+".join(f.spec.family for f in model.factors)
    if t == 0.0:
        log_pi_T, _ = _ldtsm_log_spd_samples(model, T, n, seed)
        log_pi_0 = sum(
            f.density.log_at(f.schedule(0.0), f.z0) for f in model.factors
        )
        reference = math.exp(
            log_pi_0 + log_bond_price(model, model.initial_state(), T)
        )
        return np.exp(log_pi_T), reference, label
    # t > 0: tower-property form, E[pi_T - pi_t P_t^T] = 0 on paired paths
    log_pi_t, states = _ldtsm_log_spd_samples(model, t, n, seed)
    log_pi_T = np.zeros(n)
    log_pi_t_PtT = np.zeros(n)
    for l, f in enumerate(model.factors):
        rng = path_rng(seed, 1, stream=l)
        z_T = states[l] + sample_increments(f.spec, T - t, n, rng)
        lam_T = f.schedule(T)
        log_pi_T += np.log(np.maximum(f.density.at_batch(lam_T, z_T), LOG_FLOOR))
        m = f.schedule(T) + (T - t)
        log_pi_t_PtT += np.log(
            np.maximum(f.density.at_batch(m, states[l]), LOG_FLOOR)
        )
    return np.exp(log_pi_T) - np.exp(log_pi_t_PtT), 0.0, label


def _hjm_log_spd_samples(
    vol, curve, T: float, n: int, seed: int, step: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(log pi_T Gaussian part, increment matrix, left nodes)."""
    grid = PathGrid(horizon=T, step=step)
    k = grid.n_steps
    rng = path_rng(seed, 0, stream=0)
    incs = math.sqrt(step) * rng.standard_normal((n, k))
    left = grid.times()[:-1]
    h_vec = np.array([vol.h_s(T, s) for s in left])
    log_pi = (
        math.log(curve.discount(T)) + incs @ h_vec - 0.5 * vol.int_hs_sq(T, T)
    )
    return log_pi, incs, left


def _shirakawa_jump_log_terms(
    spec: ShirakawaSpec, T: float, n: int, seed: int
) -> np.ndarray:
    """Realized jump sums minus the log normalization, vectorized by mark."""
    out = np.zeros(n)
    rng = path_rng(seed, 0, stream=1)
    for j in range(spec.n_marks):
        nu = float(spec.intensities[j])
        c = float(spec.jump_scale[j])
        kappa = float(spec.jump_decay[j])
        counts = rng.poisson(nu * T, n)
        total = int(counts.sum())
        times = rng.uniform(0.0, T, total)
        owners = np.repeat(np.arange(n), counts)
        # sum_i c (1 - e^{-kappa (T - s_i)}) per path
        contrib = np.zeros(n)
        np.add.at(contrib, owners, c * (1.0 - np.exp(-kappa * (T - times))))
        out += contrib - nu * spec.compensator(T, T, j)
    return out


def martingale_test(
    model,
    T: float,
    n_paths: int,
    seed: int,
    t: float = 0.0,
    grid_step: float = 0.01,
) -> ValidationReport:
    """E[pi_T] versus pi_0 P_0^T, within three standard errors.

    Accepts any built-in model class: density-ratio models (with the
    product state price density), Gaussian forward-rate models, quadratic
    Gaussian specs and the jump extension.  For a density-ratio model a
    start time t > 0 switches to the paired tower-property form
    E[pi_T - pi_t P_t^T] = 0 on common paths.
    """
    started = time.perf_counter()
    if isinstance(model, LdtsmModel):
        samples, reference, label = _ldtsm_martingale(model, T, n_paths, seed, t)
        return _mc_report(
            "martingale", f"ldtsm[{label}]", samples, reference, seed, started,
            details={"t": t, "T": T},
        )
    if t != 0.0:
        raise ValueError("t > 0 is supported for density-ratio models only")
    if isinstance(model, GaussHjmModel):
        log_pi, _, _ = _hjm_log_spd_samples(
            model.vol, model.curve, T, n_paths, seed, grid_step
        )
        label = f"hjm[{type(model.vol).__name__.lower()}]"
        return _mc_report(
            "martingale", label, np.exp(log_pi), model.curve.discount(T), seed,
            started, details={"T": T, "grid_step": grid_step},
        )
    if isinstance(model, QtsmSpec):
        rng = path_rng(seed, 0, stream=0)
        w_T = math.sqrt(T) * rng.standard_normal((n_paths, model.dim))
        a_T = model.A(T)
        log_pi = -np.einsum("ij,jk,ik->i", w_T, a_T, w_T) + model.k(T)
        reference = math.exp(model.k(0.0)) * qtsm_bond(
            model, np.zeros(model.dim), 0.0, T
        )
        return _mc_report(
            "martingale", f"qtsm[d={model.dim}]", np.exp(log_pi), reference,
            seed, started, details={"T": T},
        )
    if isinstance(model, ShirakawaSpec):
        log_pi, _, _ = _hjm_log_spd_samples(
            model.vol, model.curve, T, n_paths, seed, grid_step
        )
        log_pi = log_pi + _shirakawa_jump_log_terms(model, T, n_paths, seed)
        return _mc_report(
            "martingale", "shirakawa", np.exp(log_pi), model.curve.discount(T),
            seed, started, details={"T": T, "grid_step": grid_step},
        )
    raise TypeError(f"unsupported model type {type(model).__name__}")


def conditional_martingale_test(
    factor: LdtsmFactor,
    t: float,
    T: float,
    state: float,
    n_paths: int,
    seed: int,
) -> ValidationReport:
    """Pointwise form of the pricing identity from a fixed state:
    E[p(lambda_T, Z_t + dZ)] = p(lambda_T + T - t, Z_t) with dZ an exact
    increment over T - t."""
    started = time.perf_counter()
    lam_T = factor.schedule(T)
    reference = factor.density.at(lam_T + (T - t), state)
    if T == t:
        samples = np.full(max(n_paths, 2), factor.density.at(lam_T, state))
    else:
        rng = path_rng(seed, 0, stream=0)
        dz = sample_increments(factor.spec, T - t, n_paths, rng)
        samples = factor.density.at_batch(lam_T, np.asarray(state) + dz)
    return _mc_report(
        "conditional-martingale",
        f"ldtsm[{factor.spec.family}]",
        np.asarray(samples, dtype=float),
        reference,
        seed,
        started,
        details={"t": t, "T": T, "state": state},
    )


def semigroup_oracle_test(
    factor: LdtsmFactor,
    t: float,
    T: float,
    states,
    rel_tol: float = 1e-6,
) -> ValidationReport:
    """Semigroup identity behind the density-ratio price, by quadrature:
    (p(lambda_T, .) * p(T - t, .))(z) must equal p(lambda_T + T - t, z)."""
    started = time.perf_counter()
    lam_T = factor.schedule(T)
    worst = 0.0
    worst_state = None
    for z in np.atleast_1d(np.asarray(states, dtype=float)):
        conv = convolve_oracle(
            factor.density, lam_T, factor.density, T - t, z, rel_tol=0.01 * rel_tol
        )
        ref = factor.density.at(lam_T + (T - t), z)
        rel = abs(conv - ref) / abs(ref)
        if rel > worst:
            worst, worst_state = rel, float(z)
    return ValidationReport(
        name="semigroup-oracle",
        model=f"ldtsm[{factor.spec.family}]",
        kind="deterministic",
        estimate=worst,
        reference=0.0,
        rel_error=worst,
        tolerance=rel_tol,
        passed=worst <= rel_tol,
        wall_time=time.perf_counter() - started,
        details={"t": t, "T": T, "worst_state": worst_state},
    )


def qtsm_audit(
    spec: QtsmSpec,
    points,
    tol: float = 1e-8,
) -> ValidationReport:
    """Quadratic-Gaussian exponent audit.

    At each (w, t, T) the production ("sandwiched") bond price, the
    alternative "plain" exponent and the Gauss-Hermite oracle are computed
    side by side; the test passes when the production form matches the
    oracle to ``tol``, and the plain form's deviation is recorded (it is
    expected to be materially wrong whenever w != 0).
    """
    started = time.perf_counter()
    worst = 0.0
    plain_dev = 0.0
    rows = []
    for w, t, T in points:
        validated = qtsm_bond(spec, w, t, T, correction="sandwiched")
        plain = qtsm_bond(spec, w, t, T, correction="plain")
        oracle = qtsm_oracle(spec, w, t, T)
        rel = abs(validated - oracle) / abs(oracle)
        worst = max(worst, rel)
        plain_dev = max(plain_dev, abs(plain - oracle) / abs(oracle))
        rows.append(
            {
                "w": np.atleast_1d(np.asarray(w, dtype=float)).tolist(),
                "t": t,
                "T": T,
                "validated": validated,
                "plain": plain,
                "oracle": oracle,
            }
        )
    return ValidationReport(
        name="qtsm-exponent-audit",
        model=f"qtsm[d={spec.dim}]",
        kind="deterministic",
        estimate=worst,
        reference=0.0,
        rel_error=worst,
        tolerance=tol,
        passed=worst <= tol,
        wall_time=time.perf_counter() - started,
        details={"plain_form_max_deviation": plain_dev, "points": rows},
    )


def _with_retry(run, seed: int) -> ValidationReport:
    report = run(seed)
    if report.passed or report.kind != "mc":
        return report
    retry_seed = seed + 1000003
    report = run(retry_seed)
    report.details["retried"] = True
    return report


def default_suite(n_paths: int = 100_000, seed: int = 20260809) -> list[ValidationReport]:
    """The battery the `validate` subcommand runs.

    Covers, for every built-in family, the unconditional and conditional
    martingale tests, the semigroup oracle, and the quadratic-Gaussian
    exponent audit, at desk scale.
    """
    from .hjm import HoLee, InitialCurve, Vasicek

    lam1 = LambdaSchedule.constant(1.0)
    gauss = LdtsmModel.single(LdtsmFactor(GaussianSpec(1.0), lam1))
    cauchy = LdtsmModel.single(LdtsmFactor(CauchySpec(theta=1.0), lam1))
    gamma = LdtsmModel.single(LdtsmFactor(GammaSpec(1.0, 1.0), lam1, z0=0.5))
    stable = LdtsmModel.single(
        LdtsmFactor(StableSpec(alpha=1.5, theta=1.0), lam1)
    )
    curve = InitialCurve.flat(0.03)
    holee = GaussHjmModel(vol=HoLee(sigma=0.02), curve=curve)
    vasicek = GaussHjmModel(vol=Vasicek(sigma=0.02, kappa=0.5), curve=curve)
    qtsm = QtsmSpec.constant(0.5)
    shira = ShirakawaSpec(
        vol=Vasicek(sigma=0.02, kappa=0.5),
        curve=curve,
        marks=[1.0],
        intensities=[2.0],
        jump_scale=[0.1],
        jump_decay=[0.5],
    )

    reports: list[ValidationReport] = []

    def add_mc(run):
        reports.append(_with_retry(run, seed + len(reports)))

    add_mc(lambda s: martingale_test(gauss, 1.0, n_paths, s))
    add_mc(lambda s: martingale_test(cauchy, 0.5, n_paths, s))
    add_mc(lambda s: martingale_test(gamma, 1.0, n_paths, s))
    add_mc(lambda s: martingale_test(stable, 1.0, n_paths, s))
    add_mc(lambda s: martingale_test(holee, 1.0, n_paths, s))
    add_mc(lambda s: martingale_test(vasicek, 1.0, n_paths, s))
    add_mc(lambda s: martingale_test(qtsm, 1.0, n_paths, s))
    add_mc(lambda s: martingale_test(shira, 1.0, n_paths, s))

    add_mc(
        lambda s: conditional_martingale_test(
            gauss.factors[0], 0.0, 0.5, 1.0, n_paths, s
        )
    )
    add_mc(
        lambda s: conditional_martingale_test(
            cauchy.factors[0], 0.0, 1.0, 2.0, n_paths, s
        )
    )
    add_mc(
        lambda s: conditional_martingale_test(
            gamma.factors[0], 0.0, 1.0, 0.5, n_paths, s
        )
    )
    add_mc(
        lambda s: conditional_martingale_test(
            stable.factors[0], 0.0, 0.5, 1.0, n_paths, s
        )
    )

    sym_states = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    for model, times in (
        (gauss, [(0.0, 0.5), (0.25, 1.0), (0.5, 2.0)]),
        (cauchy, [(0.0, 0.5), (0.25, 1.0), (0.5, 2.0)]),
    ):
        for t, T in times:
            reports.append(
                semigroup_oracle_test(model.factors[0], t, T, sym_states)
            )
    for t, T in [(0.0, 1.0), (0.25, 1.5), (0.5, 2.5)]:
        reports.append(
            semigroup_oracle_test(
                gamma.factors[0], t, T, np.array([0.5, 1.0, 1.5, 2.0, 3.0])
            )
        )
    reports.append(
        semigroup_oracle_test(
            stable.factors[0], 0.0, 1.0, np.array([-2.0, 0.0, 1.0]),
            rel_tol=1e-4,
        )
    )

    audit_points = [
        (np.array([0.0]), 0.0, 1.0),
        (np.array([1.0]), 0.0, 1.0),
        (np.array([-0.7]), 0.5, 2.0),
    ]
    reports.append(qtsm_audit(qtsm, audit_points))
    qtsm2 = QtsmSpec.constant(np.diag([0.3, 0.7]))
    audit_points_2d = [
        (np.zeros(2), 0.0, 1.0),
        (np.array([0.4, -1.1]), 0.2, 1.4),
    ]
    reports.append(qtsm_audit(qtsm2, audit_points_2d))
    return reports


def suite_passed(reports: list[ValidationReport]) -> bool:
    return all(r.passed for r in reports)
