"""Comparison models: Gaussian forward-rate models, quadratic Gaussian
bond prices, and the finite-mark jump extension.

All bond formulas here are driven by an explicit state price density.  The
Gaussian model discretizes its stochastic integrals as left-point sums on
the simulation grid (the integrands are deterministic and smooth), with
the deterministic integrals in closed form for the two built-in volatility
families.  The quadratic Gaussian price carries two variants of its
exponent, kept side by side so the audit in `validation` can compare them
against a quadrature oracle; see `qtsm_bond`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expi

from .errors import GridError
from .quadrature import adaptive_simpson, gauss_hermite_expectation

__all__ = [
    "InitialCurve",
    "VolFamily",
    "HoLee",
    "Vasicek",
    "BrownianPath",
    "GaussHjmModel",
    "gauss_bond",
    "gauss_forward",
    "gauss_log_spd",
    "QtsmSpec",
    "qtsm_bond",
    "qtsm_forward",
    "qtsm_oracle",
    "ShirakawaSpec",
    "shirakawa_bond",
    "shirakawa_forward",
    "shirakawa_log_spd",
]


@dataclass(frozen=True, eq=False)
class InitialCurve:
    """Initial discount data T -> P_0^T, log-linear between knots.

    P_0^0 = 1 is prepended when absent; beyond the last knot the curve
    extrapolates with the last segment's forward rate.
    """

    maturities: np.ndarray
    discounts: np.ndarray

    def __post_init__(self):
        mats = np.atleast_1d(np.asarray(self.maturities, dtype=float))
        disc = np.atleast_1d(np.asarray(self.discounts, dtype=float))
        if mats.size != disc.size or mats.size == 0:
            raise ValueError("maturities and discounts must be nonempty, equal length")
        if np.any(disc <= 0.0):
            raise ValueError("discount factors must be positive")
        if mats[0] != 0.0:
            mats = np.concatenate([[0.0], mats])
            disc = np.concatenate([[1.0], disc])
        elif disc[0] != 1.0:
            raise ValueError("P_0^0 must equal 1")
        if np.any(np.diff(mats) <= 0.0):
            raise ValueError("maturities must be strictly increasing")
        if mats.size == 1:
            mats = np.array([0.0, 1.0])
            disc = np.array([1.0, 1.0])
        object.__setattr__(self, "maturities", mats)
        object.__setattr__(self, "discounts", disc)
        object.__setattr__(self, "_log_disc", np.log(disc))

    @classmethod
    def flat(cls, rate: float, horizon: float = 100.0) -> "InitialCurve":
        return cls(
            maturities=np.array([0.0, horizon]),
            discounts=np.array([1.0, math.exp(-rate * horizon)]),
        )

    def _segment(self, T: float) -> int:
        idx = int(np.searchsorted(self.maturities, T, side="right")) - 1
        return min(max(idx, 0), self.maturities.size - 2)

    def log_discount(self, T: float) -> float:
        i = self._segment(T)
        t0, t1 = self.maturities[i], self.maturities[i + 1]
        l0, l1 = self._log_disc[i], self._log_disc[i + 1]
        return float(l0 + (l1 - l0) * (T - t0) / (t1 - t0))

    def discount(self, T: float) -> float:
        return math.exp(self.log_discount(T))

    def forward(self, T: float) -> float:
        """f(0, T); piecewise constant, right segment at knots."""
        i = self._segment(T)
        t0, t1 = self.maturities[i], self.maturities[i + 1]
        return float(-(self._log_disc[i + 1] - self._log_disc[i]) / (t1 - t0))


class VolFamily:
    """Forward-volatility family exposing the bond-exposure slope
    h_s(T, s) and its maturity derivative h_Ts(T, s).

    Subclasses for further families need only those two methods; the
    deterministic integrals default to adaptive quadrature and may be
    overridden with closed forms.
    """

    def h_s(self, T: float, s: float) -> float:
        raise NotImplementedError

    def h_Ts(self, T: float, s: float) -> float:
        raise NotImplementedError

    def int_hs_sq(self, T: float, t: float) -> float:
        """Integral of h_s(T, s)^2 over s in [0, t]."""
        return adaptive_simpson(lambda s: self.h_s(T, s) ** 2, 0.0, t)

    def int_hTs_hs(self, T: float, t: float) -> float:
        """Integral of h_Ts(T, s) h_s(T, s) over s in [0, t]."""
        return adaptive_simpson(
            lambda s: self.h_Ts(T, s) * self.h_s(T, s), 0.0, t
        )


@dataclass(frozen=True)
class HoLee(VolFamily):
    """Constant forward volatility: h_s(T, s) = sigma (T - s)."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")

    def h_s(self, T: float, s: float) -> float:
        return self.sigma * (T - s)

    def h_Ts(self, T: float, s: float) -> float:
        return self.sigma

    def int_hs_sq(self, T: float, t: float) -> float:
        return self.sigma**2 * (T**3 - (T - t) ** 3) / 3.0

    def int_hTs_hs(self, T: float, t: float) -> float:
        return self.sigma**2 * (T * t - 0.5 * t * t)


@dataclass(frozen=True)
class Vasicek(VolFamily):
    """Exponentially damped forward volatility:
    h_s(T, s) = (sigma/kappa)(1 - e^{-kappa (T-s)})."""

    sigma: float
    kappa: float

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")

    def h_s(self, T: float, s: float) -> float:
        return (self.sigma / self.kappa) * (1.0 - math.exp(-self.kappa * (T - s)))

    def h_Ts(self, T: float, s: float) -> float:
        return self.sigma * math.exp(-self.kappa * (T - s))

    def int_hs_sq(self, T: float, t: float) -> float:
        k = self.kappa
        e1 = math.exp(-k * (T - t)) - math.exp(-k * T)
        e2 = math.exp(-2.0 * k * (T - t)) - math.exp(-2.0 * k * T)
        return (self.sigma / k) ** 2 * (t - 2.0 * e1 / k + 0.5 * e2 / k)

    def int_hTs_hs(self, T: float, t: float) -> float:
        k = self.kappa
        e1 = math.exp(-k * (T - t)) - math.exp(-k * T)
        e2 = math.exp(-2.0 * k * (T - t)) - math.exp(-2.0 * k * T)
        return (self.sigma**2 / k) * (e1 / k - 0.5 * e2 / k)


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """Scalar Brownian path sampled on a uniform grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise GridError("times and values must be matching 1-d arrays")
        if times[0] != 0.0 or values[0] != 0.0:
            raise GridError("a Brownian path starts at (0, 0)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def node_index(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t - 1e-12))
        if idx >= self.times.size or abs(self.times[idx] - t) > 1e-9:
            raise GridError(f"grid does not cover [0, {t:g}] with a node at {t:g}")
        return idx


@dataclass(frozen=True, eq=False)
class GaussHjmModel:
    """Gaussian forward-rate model bundle (volatility + initial curve)."""

    vol: VolFamily
    curve: InitialCurve


def _exposure_sum(
    vol: VolFamily, path: BrownianPath, t: float, T: float
) -> float:
    """Left-point sum of [h_s(T, s) - h_s(t, s)] dW over [0, t]."""
    idx = path.node_index(t)
    if idx == 0:
        return 0.0
    s = path.times[:idx]
    dw = np.diff(path.values[: idx + 1])
    weights = np.array([vol.h_s(T, si) - vol.h_s(t, si) for si in s])
    return float(weights @ dw)


def gauss_bond(
    vol: VolFamily,
    curve: InitialCurve,
    path: BrownianPath,
    t: float,
    T: float,
) -> float:
    """(P_0^T / P_0^t) exp{ Int <h_s(T,s) - h_s(t,s), dW_s>
    - (1/2) Int (h_s(T,s)^2 - h_s(t,s)^2) ds } on [0, t]."""
    stoch = _exposure_sum(vol, path, t, T)
    det = vol.int_hs_sq(T, t) - vol.int_hs_sq(t, t)
    return math.exp(
        curve.log_discount(T) - curve.log_discount(t) + stoch - 0.5 * det
    )


def gauss_forward(
    vol: VolFamily,
    curve: InitialCurve,
    path: BrownianPath,
    t: float,
    T: float,
) -> float:
    """f(0,T) - Int h_Ts(T,s) dW_s + Int h_Ts(T,s) h_s(T,s) ds on [0, t]."""
    idx = path.node_index(t)
    stoch = 0.0
    if idx > 0:
        s = path.times[:idx]
        dw = np.diff(path.values[: idx + 1])
        stoch = float(np.array([vol.h_Ts(T, si) for si in s]) @ dw)
    return curve.forward(T) - stoch + vol.int_hTs_hs(T, t)


def gauss_log_spd(
    vol: VolFamily, curve: InitialCurve, path: BrownianPath, T: float
) -> float:
    """log pi_T = log P_0^T + Int h_s(T,s) dW - (1/2) Int h_s(T,s)^2 ds."""
    idx = path.node_index(T)
    stoch = 0.0
    if idx > 0:
        s = path.times[:idx]
        dw = np.diff(path.values[: idx + 1])
        stoch = float(np.array([vol.h_s(T, si) for si in s]) @ dw)
    return curve.log_discount(T) + stoch - 0.5 * vol.int_hs_sq(T, T)


class QtsmSpec:
    """Quadratic state price density pi_t(x) = exp(-<A_t x, x> + k_t).

    ``A`` maps time to a positive definite symmetric matrix; the built-in
    parametrization moves the eigenvalues of a fixed orthonormal frame
    exponentially between a start and an asymptote, and ``k`` is piecewise
    linear.  Arbitrary curves can be supplied directly via the constructor
    for use cases outside the parametric family.
    """

    def __init__(
        self,
        a_fn: Callable[[float], np.ndarray],
        k_fn: Callable[[float], float],
        dim: int,
    ):
        self._a_fn = a_fn
        self._k_fn = k_fn
        self.dim = int(dim)
        for probe in (0.0, 0.5, 5.0):
            a = self.A(probe)
            if a.shape != (self.dim, self.dim):
                raise ValueError("A(t) must be dim x dim")
            if not np.allclose(a, a.T, atol=1e-12):
                raise ValueError("A(t) must be symmetric")
            if np.any(np.linalg.eigvalsh(a) <= 0.0):
                raise ValueError("A(t) must be positive definite")

    @classmethod
    def exponential_eigs(
        cls,
        eigs0,
        eigs_inf,
        decay: float,
        frame: np.ndarray | None = None,
        k_times=(0.0,),
        k_values=(0.0,),
    ) -> "QtsmSpec":
        eigs0 = np.atleast_1d(np.asarray(eigs0, dtype=float))
        eigs_inf = np.atleast_1d(np.asarray(eigs_inf, dtype=float))
        if eigs0.size != eigs_inf.size:
            raise ValueError("eigenvalue arrays must have equal length")
        if np.any(eigs0 <= 0.0) or np.any(eigs_inf <= 0.0):
            raise ValueError("eigenvalues must be positive")
        if decay < 0.0:
            raise ValueError("decay must be nonnegative")
        d = eigs0.size
        if frame is None:
            frame = np.eye(d)
        frame = np.asarray(frame, dtype=float)
        if not np.allclose(frame @ frame.T, np.eye(d), atol=1e-10):
            raise ValueError("frame must be orthonormal")
        kt = np.atleast_1d(np.asarray(k_times, dtype=float))
        kv = np.atleast_1d(np.asarray(k_values, dtype=float))

        def a_fn(t: float) -> np.ndarray:
            eigs = eigs_inf + (eigs0 - eigs_inf) * math.exp(-decay * t)
            return frame @ np.diag(eigs) @ frame.T

        def k_fn(t: float) -> float:
            return float(np.interp(t, kt, kv))

        return cls(a_fn, k_fn, d)

    @classmethod
    def constant(cls, a_matrix, k: float = 0.0) -> "QtsmSpec":
        a = np.atleast_2d(np.asarray(a_matrix, dtype=float))
        return cls(lambda t: a, lambda t: float(k), a.shape[0])

    def A(self, t: float) -> np.ndarray:
        return np.asarray(self._a_fn(t), dtype=float)

    def k(self, t: float) -> float:
        return float(self._k_fn(t))


def qtsm_bond(
    spec: QtsmSpec,
    w,
    t: float,
    T: float,
    correction: str = "sandwiched",
) -> float:
    """det(2(T-t) A_T + I)^{-1/2} exp{-<[A_T - A_t - C] w, w> + k_T - k_t}.

    The production correction term is the "sandwiched"
    C = 2(T-t) A_T (2(T-t) A_T + I)^{-1} A_T, which the Gauss-Hermite
    oracle confirms.  ``correction="plain"`` evaluates the alternative
    C = 2(T-t)(2(T-t) A_T + I)^{-1} instead -- the form one obtains if the
    completion of squares drops the curvature factors on the linear term.
    It disagrees with the oracle whenever w != 0 and is retained only so
    the audit can quantify the difference; never price with it.
    """
    if T < t:
        raise ValueError("maturity precedes valuation time")
    delta = T - t
    w = np.atleast_1d(np.asarray(w, dtype=float))
    a_T = spec.A(T)
    a_t = spec.A(t)
    eigs, frame = np.linalg.eigh(a_T)
    if np.any(eigs <= 0.0):
        raise ValueError("A_T must be positive definite")
    log_det = float(np.sum(np.log1p(2.0 * delta * eigs)))
    y = frame.T @ w
    if correction == "sandwiched":
        corr = float(
            np.sum(2.0 * delta * eigs**2 * y**2 / (2.0 * delta * eigs + 1.0))
        )
    elif correction == "plain":
        corr = float(np.sum(2.0 * delta * y**2 / (2.0 * delta * eigs + 1.0)))
    else:
        raise ValueError("correction must be 'sandwiched' or 'plain'")
    exponent = (
        -float(w @ a_T @ w)
        + float(w @ a_t @ w)
        + corr
        + spec.k(T)
        - spec.k(t)
    )
    return math.exp(-0.5 * log_det + exponent)


def qtsm_forward(
    spec: QtsmSpec, w, t: float, T: float, h: float | None = None
) -> float:
    """-d/dT log qtsm_bond by central difference (one-sided at T = t)."""
    if h is None:
        h = 1e-5 * max(1.0, T)
    if T - h < t:
        return -(
            math.log(qtsm_bond(spec, w, t, T + h))
            - math.log(qtsm_bond(spec, w, t, T))
        ) / h
    return -(
        math.log(qtsm_bond(spec, w, t, T + h))
        - math.log(qtsm_bond(spec, w, t, T - h))
    ) / (2.0 * h)


def qtsm_oracle(spec: QtsmSpec, w, t: float, T: float, tol: float = 1e-10) -> float:
    """E[pi_T(W_T) | W_t = w] / pi_t(w) by Gauss-Hermite quadrature.

    Tensorized over dimensions (dim <= 3), with the per-axis node count
    doubled until two successive levels agree to ``tol``.  Serves as
    ground truth for `qtsm_bond`.
    """
    if T < t:
        raise ValueError("maturity precedes valuation time")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    delta = T - t
    a_T = spec.A(T)
    k_T = spec.k(T)
    if delta == 0.0:
        return 1.0
    sqrt_delta = math.sqrt(delta)

    def integrand(xi: np.ndarray) -> float:
        w_T = w + sqrt_delta * xi
        return math.exp(-float(w_T @ a_T @ w_T) + k_T)

    expectation = gauss_hermite_expectation(integrand, spec.dim, tol=tol)
    log_pi_t = -float(w @ spec.A(t) @ w) + spec.k(t)
    return expectation / math.exp(log_pi_t)


@dataclass(frozen=True, eq=False)
class ShirakawaSpec:
    """Gaussian model extended by finite-mark jumps.

    Marks x_1..x_m arrive with intensities nu_j; a jump at time s moves the
    log state price by the bounded kernel
    delta(t, s, x_j) = c_j (1 - e^{-kappa_j (t - s)}), whose t-derivative
    is bounded as well.
    """

    vol: VolFamily
    curve: InitialCurve
    marks: np.ndarray
    intensities: np.ndarray
    jump_scale: np.ndarray
    jump_decay: np.ndarray

    def __post_init__(self):
        marks = np.atleast_1d(np.asarray(self.marks, dtype=float))
        nu = np.atleast_1d(np.asarray(self.intensities, dtype=float))
        scale = np.atleast_1d(np.asarray(self.jump_scale, dtype=float))
        decay = np.atleast_1d(np.asarray(self.jump_decay, dtype=float))
        m = marks.size
        if not (nu.size == scale.size == decay.size == m):
            raise ValueError("marks, intensities, scales, decays must align")
        if np.any(nu < 0.0):
            raise ValueError("intensities must be nonnegative")
        if np.any(decay <= 0.0):
            raise ValueError("jump decays must be positive")
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "intensities", nu)
        object.__setattr__(self, "jump_scale", scale)
        object.__setattr__(self, "jump_decay", decay)

    @property
    def n_marks(self) -> int:
        return self.marks.size

    def delta(self, t: float, s: float, j: int) -> float:
        return self.jump_scale[j] * (1.0 - math.exp(-self.jump_decay[j] * (t - s)))

    def delta_dT(self, T: float, s: float, j: int) -> float:
        c, k = self.jump_scale[j], self.jump_decay[j]
        return c * k * math.exp(-k * (T - s))

    def compensator(
        self, t_arg: float, t: float, j: int, method: str = "closed"
    ) -> float:
        """Integral of (e^{delta(t_arg, s, x_j)} - 1) over s in [0, t]."""
        c, k = float(self.jump_scale[j]), float(self.jump_decay[j])
        if c == 0.0 or t == 0.0:
            return 0.0
        if method == "quad":
            return adaptive_simpson(
                lambda s: math.exp(self.delta(t_arg, s, j)) - 1.0, 0.0, t
            )
        # closed form through the exponential integral:
        # Int e^{-c e^{-k u}} du = -(1/k) Ei(-c e^{-k u})
        upper = -c * math.exp(-k * (t_arg - t))
        lower = -c * math.exp(-k * t_arg)
        return math.exp(c) * (expi(upper) - expi(lower)) / k - t

    def compensator_dT(self, T: float, t: float, j: int) -> float:
        """Integral of delta_T(T, s, x_j) e^{delta(T, s, x_j)} over [0, t]."""
        c, k = float(self.jump_scale[j]), float(self.jump_decay[j])
        if c == 0.0 or t == 0.0:
            return 0.0
        v0 = c * math.exp(-k * T)
        v1 = c * math.exp(-k * (T - t))
        return math.exp(c) * (math.exp(-v0) - math.exp(-v1))


JumpRecord = Sequence[tuple[float, int]]


def _jump_terms(spec: ShirakawaSpec, jumps: JumpRecord, t: float, T: float):
    jump_sum = 0.0
    for s_i, j_i in jumps:
        if s_i <= t:
            jump_sum += spec.delta(T, s_i, j_i) - spec.delta(t, s_i, j_i)
    comp = sum(
        spec.intensities[j]
        * (spec.compensator(T, t, j) - spec.compensator(t, t, j))
        for j in range(spec.n_marks)
    )
    return jump_sum, comp


def shirakawa_bond(
    spec: ShirakawaSpec,
    path: BrownianPath,
    jumps: JumpRecord,
    t: float,
    T: float,
) -> float:
    """Gaussian bond times the jump and compensator adjustments.

    With no marks or a vanishing kernel the jump factors are exactly one
    and the price degenerates to `gauss_bond`.
    """
    base = gauss_bond(spec.vol, spec.curve, path, t, T)
    jump_sum, comp = _jump_terms(spec, jumps, t, T)
    return base * math.exp(jump_sum - comp)


def shirakawa_forward(
    spec: ShirakawaSpec,
    path: BrownianPath,
    jumps: JumpRecord,
    t: float,
    T: float,
) -> float:
    """-d/dT of the log jump bond price.

    Equals the Gaussian forward rate minus the realized-jump sensitivity
    sum delta_T(T, s_i, x_i) plus the compensator sensitivity
    sum nu_j Int delta_T e^{delta} ds, i.e. the compensated jump term
    enters with the same sign pattern as the Gaussian dW term.
    """
    base = gauss_forward(spec.vol, spec.curve, path, t, T)
    jump_sens = sum(
        spec.delta_dT(T, s_i, j_i) for s_i, j_i in jumps if s_i <= t
    )
    comp_sens = sum(
        spec.intensities[j] * spec.compensator_dT(T, t, j)
        for j in range(spec.n_marks)
    )
    return base - jump_sens + comp_sens


def shirakawa_log_spd(
    spec: ShirakawaSpec, path: BrownianPath, jumps: JumpRecord, T: float
) -> float:
    """log pi_T for the jump model (Gaussian part, realized jumps,
    normalization by E[e^{jump part}])."""
    base = gauss_log_spd(spec.vol, spec.curve, path, T)
    jump_sum = sum(spec.delta(T, s_i, j_i) for s_i, j_i in jumps if s_i <= T)
    norm = sum(
        spec.intensities[j] * spec.compensator(T, T, j)
        for j in range(spec.n_marks)
    )
    return base + jump_sum - norm
