"""Bond markets scaled by the driver's transition density.

A factor prices zero-coupon bonds as the ratio

    P_t^T = p(lambda_T + T - t, Z_t) / p(lambda_t, Z_t)

for a continuous nonnegative time change ``lambda``; independent factors
multiply.  The module provides the generic density-ratio price, closed
forms for the Gaussian, Cauchy and Gamma families, forward and short
rates, and a bisection calibrator recovering ``lambda`` from a quoted
discount curve.

Prices above one, and the negative rates they imply, are legitimate
outputs of these models and are surfaced rather than rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from .density import (
    ClosedFormDensity,
    DensityEvaluator,
    InvertedDensity,
    LOG_FLOOR,
    auto_grid,
)
from .errors import (
    AmbiguousRootError,
    StateSupportError,
    UnattainableCurveError,
)
from .levy import (
    CauchySpec,
    GammaSpec,
    GaussianSpec,
    LevySpec,
    StableSpec,
    symbol,
)

__all__ = [
    "LambdaSchedule",
    "LdtsmFactor",
    "LdtsmModel",
    "StateSnapshot",
    "bond_price",
    "log_bond_price",
    "gaussian_ldtsm_closed",
    "cauchy_ldtsm_closed",
    "gamma_ldtsm_closed",
    "forward_rate",
    "forward_rate_info",
    "short_rate",
    "calibrate_lambda",
    "CalibrationResult",
    "ForwardRateInfo",
]

_LOG_FLOOR_LOG = math.log(LOG_FLOOR)


@dataclass(frozen=True, eq=False)
class LambdaSchedule:
    """Continuous time change lambda: [0, inf) -> [0, inf).

    Piecewise linear on knots starting at time 0, constant beyond the last
    knot.  Continuity is automatic; values must be nonnegative.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if times.size != values.size or times.size == 0:
            raise ValueError("times and values must be nonempty, equal length")
        if times[0] != 0.0:
            raise ValueError("first knot must be at time 0")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("knot times must be strictly increasing")
        if np.any(values < 0.0):
            raise ValueError("lambda values must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: float) -> "LambdaSchedule":
        return cls(times=np.array([0.0]), values=np.array([float(value)]))

    def __call__(self, t) -> float | np.ndarray:
        out = np.interp(t, self.times, self.values)
        return float(out) if np.ndim(t) == 0 else out

    def slope(self, t: float) -> float:
        """Right derivative; 0 beyond the last knot."""
        if self.times.size == 1 or t >= self.times[-1]:
            return 0.0
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        idx = max(idx, 0)
        dt = self.times[idx + 1] - self.times[idx]
        return float((self.values[idx + 1] - self.values[idx]) / dt)

    @property
    def min_value(self) -> float:
        return float(self.values.min())


def _default_density(spec: LevySpec, t_min: float) -> DensityEvaluator:
    if spec.has_closed_form:
        return ClosedFormDensity(spec)
    sym = symbol(spec)
    return InvertedDensity(
        symbol=sym,
        grid=auto_grid(sym, t_min=t_min, window_min=1500.0),
        query_window=256.0,
    )


@dataclass(frozen=True, eq=False)
class LdtsmFactor:
    """One driver with its time change and starting point.

    The starting point ``z0`` is the translation of the construction: the
    simulated state starts there, and prices depend on the state alone, so
    pricing a shifted factor at ``z`` equals pricing the unshifted one at
    the same ``z``.  Gamma factors must start strictly positive and carry a
    strictly positive schedule so the density stays finite along paths.
    """

    spec: LevySpec
    schedule: LambdaSchedule
    z0: float | np.ndarray = 0.0
    density: DensityEvaluator | None = None

    def __post_init__(self):
        if isinstance(self.spec, GammaSpec):
            if self.schedule.min_value <= 0.0:
                raise ValueError("gamma factors need strictly positive lambda")
            if np.any(np.asarray(self.z0) <= 0.0):
                raise ValueError("gamma factors need z0 > 0")
        if self.density is None:
            t_min = self.schedule.min_value
            if not self.spec.has_closed_form and t_min <= 0.0:
                raise ValueError(
                    "numerically inverted factors need strictly positive lambda"
                )
            object.__setattr__(
                self, "density", _default_density(self.spec, max(t_min, 1e-6))
            )

    @property
    def dim(self) -> int:
        return self.spec.dim

    def log_bond(self, t: float, z, T: float) -> float:
        """log of the factor's density-ratio bond price."""
        if T < t:
            raise ValueError("maturity precedes valuation time")
        if isinstance(self.spec, GammaSpec) and np.any(np.asarray(z) <= 0.0):
            raise StateSupportError("gamma state must be strictly positive")
        lam_t = self.schedule(t)
        m = self.schedule(T) + (T - t)
        log_den = self.density.log_at(lam_t, z)
        if log_den <= _LOG_FLOOR_LOG:
            raise StateSupportError(
                f"state price density vanished at t={t:g} (state outside support)"
            )
        log_num = self.density.log_at(m, z)
        return log_num - log_den

    def forward_rate(self, t: float, z, T: float, h: float | None = None):
        """(rate, one_sided_flag); analytic for closed-form families."""
        lam_slope = self.schedule.slope(T)
        m = self.schedule(T) + (T - t)
        m_prime = lam_slope + 1.0
        spec = self.spec
        if isinstance(spec, GaussianSpec):
            q = float(
                np.atleast_1d(z) @ np.linalg.inv(spec.covariance) @ np.atleast_1d(z)
            )
            d = spec.dim
            return m_prime * (0.5 * d / m - 0.5 * q / m**2), False
        if isinstance(spec, CauchySpec) or (
            isinstance(spec, StableSpec) and spec.alpha == 1.0
        ):
            theta = spec.theta
            gamma = spec.drift if isinstance(spec, CauchySpec) else np.zeros(1)
            d = spec.dim
            zv = np.atleast_1d(np.asarray(z, dtype=float))
            resid = zv - m * gamma
            r2 = float(resid @ resid)
            rate = m_prime * (
                -1.0 / m
                + (d + 1)
                * (theta**2 * m - float(gamma @ resid))
                / (theta**2 * m**2 + r2)
            )
            return rate, False
        if isinstance(spec, GammaSpec):
            a, b = spec.shape, spec.rate
            zf = float(np.asarray(z).reshape(()))
            return a * m_prime * (float(digamma(a * m)) - math.log(b * zf)), False
        # generic: finite differences on the log price
        if h is None:
            h = 1e-5 * max(1.0, T)
        if T - h < t:
            f = -(self.log_bond(t, z, T + h) - self.log_bond(t, z, T)) / h
            return f, True
        f = -(self.log_bond(t, z, T + h) - self.log_bond(t, z, T - h)) / (2.0 * h)
        return f, False


@dataclass(frozen=True, eq=False)
class LdtsmModel:
    """Product of mutually independent factors."""

    factors: tuple[LdtsmFactor, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("a model needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def single(cls, factor: LdtsmFactor) -> "LdtsmModel":
        return cls(factors=(factor,))

    def initial_state(self) -> "StateSnapshot":
        return StateSnapshot(time=0.0, states=tuple(f.z0 for f in self.factors))


@dataclass(frozen=True, eq=False)
class StateSnapshot:
    """Joint factor state at one valuation time."""

    time: float
    states: tuple

    def __post_init__(self):
        if self.time < 0.0:
            raise ValueError("time must be nonnegative")
        object.__setattr__(self, "states", tuple(self.states))


def log_bond_price(model: LdtsmModel, state: StateSnapshot, T: float) -> float:
    """Log price, assembled in log space and exponentiated by the caller."""
    if len(state.states) != len(model.factors):
        raise ValueError("state has wrong number of factor components")
    return sum(
        factor.log_bond(state.time, z, T)
        for factor, z in zip(model.factors, state.states)
    )


def bond_price(model: LdtsmModel, state: StateSnapshot, T: float) -> float:
    """Zero-coupon bond price prod_l p_l(lambda_T + T - t, Z_t) / p_l(lambda_t, Z_t).

    Equals 1 exactly at T = t.  Values above 1 are possible and returned
    as-is.  Raises StateSupportError when a denominator density falls below
    the numeric floor, and ValueError for T < t.
    """
    return math.exp(log_bond_price(model, state, T))


def gaussian_ldtsm_closed(
    covariance, schedule: LambdaSchedule, t: float, z, T: float
) -> float:
    """(lambda_t / m)^{d/2} exp{-(m^{-1} - lambda_t^{-1}) <Sigma^{-1} z, z>/2},
    with m = lambda_T + T - t."""
    spec = covariance if isinstance(covariance, GaussianSpec) else GaussianSpec(covariance)
    lam_t = schedule(t)
    m = schedule(T) + (T - t)
    if lam_t <= 0.0 or m <= 0.0:
        raise ValueError("schedule must be positive at both arguments")
    zv = np.atleast_1d(np.asarray(z, dtype=float))
    q = float(zv @ np.linalg.inv(spec.covariance) @ zv)
    d = spec.dim
    return math.exp(
        0.5 * d * (math.log(lam_t) - math.log(m))
        - 0.5 * (1.0 / m - 1.0 / lam_t) * q
    )


def cauchy_ldtsm_closed(
    theta: float, drift, schedule: LambdaSchedule, t: float, z, T: float
) -> float:
    """(m / lambda_t) ((theta^2 lambda_t^2 + |z - lambda_t g|^2) /
    (theta^2 m^2 + |z - m g|^2))^{(d+1)/2}, m = lambda_T + T - t.

    Each slot is centred at its own time argument times the drift, so the
    expression is exactly the ratio of the two density evaluations; with
    zero drift the centring drops out.
    """
    lam_t = schedule(t)
    m = schedule(T) + (T - t)
    if lam_t <= 0.0:
        raise StateSupportError("lambda_t = 0 puts the price on the boundary")
    zv = np.atleast_1d(np.asarray(z, dtype=float))
    gamma = np.atleast_1d(np.asarray(drift, dtype=float))
    if gamma.size == 1 and zv.size > 1:
        gamma = np.full(zv.size, float(gamma[0]))
    d = zv.size
    r2_den = float(np.sum((zv - lam_t * gamma) ** 2))
    r2_num = float(np.sum((zv - m * gamma) ** 2))
    half = 0.5 * (d + 1)
    return math.exp(
        math.log(m / lam_t)
        + half
        * (
            math.log(theta**2 * lam_t**2 + r2_den)
            - math.log(theta**2 * m**2 + r2_num)
        )
    )


def gamma_ldtsm_closed(
    a: float, b: float, schedule: LambdaSchedule, t: float, z: float, T: float
) -> float:
    """b^{a(m - lambda_t)} Gamma(a lambda_t)/Gamma(a m) z^{a(m - lambda_t)},
    with m = lambda_T + T - t; all Gamma arithmetic in log space."""
    lam_t = schedule(t)
    m = schedule(T) + (T - t)
    if lam_t <= 0.0 or m <= 0.0:
        raise ValueError("gamma factors need strictly positive lambda")
    z = float(z)
    if z <= 0.0:
        raise StateSupportError("gamma state must be strictly positive")
    log_p = (
        a * (m - lam_t) * (math.log(b) + math.log(z))
        + math.lgamma(a * lam_t)
        - math.lgamma(a * m)
    )
    if log_p > 700.0:
        raise OverflowError("log bond price overflows the exponential")
    return math.exp(log_p)


@dataclass(frozen=True)
class ForwardRateInfo:
    value: float
    one_sided: bool


def forward_rate_info(
    model: LdtsmModel, state: StateSnapshot, T: float, h: float | None = None
) -> ForwardRateInfo:
    """f(t, T) = -d/dT log P_t^T with per-factor analytic overrides.

    Families without a closed form fall back to a central difference with
    bump ``h`` (default 1e-5 max(1, T)); when T - h would precede t the
    difference degrades to one-sided and is flagged.
    """
    if T < state.time:
        raise ValueError("maturity precedes valuation time")
    total = 0.0
    one_sided = False
    for factor, z in zip(model.factors, state.states):
        value, flag = factor.forward_rate(state.time, z, T, h=h)
        total += value
        one_sided = one_sided or flag
    return ForwardRateInfo(value=total, one_sided=one_sided)


def forward_rate(
    model: LdtsmModel, state: StateSnapshot, T: float, h: float | None = None
) -> float:
    return forward_rate_info(model, state, T, h=h).value


def short_rate(model: LdtsmModel, state: StateSnapshot) -> float:
    """r_t = f(t, t); rates of independent factors add."""
    return forward_rate(model, state, state.time)


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    schedule: LambdaSchedule
    residuals: np.ndarray
    #: whether the fitted discount curve is decreasing in maturity
    #: (reported, never enforced)
    monotone_discount: bool


def _log_density_of(spec: LevySpec, density: DensityEvaluator, s: float, z0):
    return density.log_at(s, z0)


def calibrate_lambda(
    spec: LevySpec,
    z0,
    maturities,
    prices,
    lam0: float,
    lam_max: float = 50.0,
    tol: float = 1e-10,
    density: DensityEvaluator | None = None,
    scan_points: int = 128,
) -> CalibrationResult:
    """Recover lambda knots from quoted discounts P_0^{T_i}.

    Solves p(lambda + T_i, z0) = P_i p(lambda_0, z0) for each maturity by
    bisection to |d lambda| <= ``tol`` on [0, lam_max] (strictly positive
    bracket for gamma factors).  The map lambda -> p(lambda + T_i, z0)
    must be strictly monotone on the bracket, verified on a scan grid;
    otherwise the candidate sign-change intervals are reported.  A quote
    outside the attainable range raises with that range attached.
    """
    maturities = np.atleast_1d(np.asarray(maturities, dtype=float))
    prices = np.atleast_1d(np.asarray(prices, dtype=float))
    if maturities.size != prices.size or maturities.size == 0:
        raise ValueError("maturities and prices must be nonempty, equal length")
    if np.any(np.diff(maturities) <= 0.0):
        raise ValueError("maturities must be strictly increasing")
    if np.any(prices <= 0.0):
        raise ValueError("prices must be positive")
    if density is None:
        t_floor = min(lam0, float(maturities[0]))
        density = _default_density(spec, max(min(t_floor, 1.0), 1e-3))
    lam_lo = 1e-9 if isinstance(spec, GammaSpec) else 0.0
    if lam0 <= lam_lo:
        raise ValueError("lambda_0 must lie inside the search bracket")

    log_pi0 = density.log_at(lam0, z0)
    knots_t = [0.0]
    knots_v = [float(lam0)]
    for T_i, P_i in zip(maturities, prices):
        target = math.log(P_i) + log_pi0

        def objective(lam: float) -> float:
            return density.log_at(lam + T_i, z0) - target

        grid = np.linspace(lam_lo, lam_max, scan_points)
        vals = np.array([objective(g) for g in grid])
        dens_vals = vals + target  # log p(lambda + T_i, z0) on the grid
        diffs = np.diff(dens_vals)
        monotone = np.all(diffs > 0.0) or np.all(diffs < 0.0)
        signs = np.sign(vals)
        changes = [
            (float(grid[j]), float(grid[j + 1]))
            for j in range(len(grid) - 1)
            if signs[j] == 0.0 or signs[j] != signs[j + 1]
        ]
        if not monotone:
            raise AmbiguousRootError(
                f"density not monotone in lambda on [{lam_lo:g}, {lam_max:g}] "
                f"for maturity {T_i:g}",
                intervals=changes,
            )
        if not changes:
            lo_p = math.exp(float(dens_vals.min()) - log_pi0)
            hi_p = math.exp(float(dens_vals.max()) - log_pi0)
            raise UnattainableCurveError(
                f"price {P_i:g} at maturity {T_i:g} unattainable; "
                f"attainable range is ({lo_p:.6g}, {hi_p:.6g})",
                attainable=(lo_p, hi_p),
            )
        lo, hi = changes[0]
        f_lo = objective(lo)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            f_mid = objective(mid)
            if f_mid == 0.0:
                lo = hi = mid
                break
            if (f_lo < 0.0) == (f_mid < 0.0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        knots_t.append(float(T_i))
        knots_v.append(0.5 * (lo + hi))

    schedule = LambdaSchedule(times=np.array(knots_t), values=np.array(knots_v))
    fitted = np.array(
        [
            math.exp(density.log_at(schedule(T_i) + T_i, z0) - log_pi0)
            for T_i in maturities
        ]
    )
    residuals = fitted - prices
    monotone_discount = bool(np.all(np.diff(fitted) < 0.0))
    return CalibrationResult(
        schedule=schedule, residuals=residuals, monotone_discount=monotone_discount
    )
