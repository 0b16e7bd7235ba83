"""Numerical evaluation of transition densities.

Two evaluator flavours share one interface: closed-form densities wrap a
driver spec directly, inverted densities discretize the Fourier transform
of exp(-t psi) on a uniform frequency grid and interpolate the FFT output
with a cubic spline.  The module also provides the convolution quadrature
oracle p(s, .) * p(u, .) = p(s+u, .) used as independent ground truth by
the validation harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from scipy.special import gammaln

from .errors import (
    AtomicDistributionError,
    CutoffError,
    GridError,
)
from .levy import CauchySpec, GammaSpec, GaussianSpec, LevySpec, LevySymbol, StableSpec
from .quadrature import adaptive_simpson, integrate_real_line

__all__ = [
    "InversionGrid",
    "DensityEvaluator",
    "ClosedFormDensity",
    "InvertedDensity",
    "invert",
    "required_cutoff",
    "auto_grid",
    "convolve_oracle",
]

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class InversionGrid:
    """Uniform frequency grid for one-dimensional Fourier inversion.

    ``cutoff`` is the half-width of the frequency window [-Xi, Xi] and
    ``n_nodes`` the (power of two) node count.  Spacings and the implied
    spatial window follow: dxi = 2 Xi / N, dx = pi / Xi, half-window
    X = N dx / 2.
    """

    cutoff: float
    n_nodes: int

    def __post_init__(self):
        if self.cutoff <= 0.0:
            raise GridError("cutoff must be positive")
        n = self.n_nodes
        if n < 2**10 or (n & (n - 1)) != 0:
            raise GridError("n_nodes must be a power of two, at least 2**10")

    @property
    def freq_step(self) -> float:
        return 2.0 * self.cutoff / self.n_nodes

    @property
    def space_step(self) -> float:
        return math.pi / self.cutoff

    @property
    def window(self) -> float:
        """Half-width of the spatial window covered by the FFT output."""
        return 0.5 * self.n_nodes * self.space_step

    def frequencies(self) -> np.ndarray:
        k = np.arange(self.n_nodes)
        return (k - self.n_nodes // 2) * self.freq_step

    def abscissas(self) -> np.ndarray:
        k = np.arange(self.n_nodes)
        return (k - self.n_nodes // 2) * self.space_step


def required_cutoff(
    symbol: LevySymbol, t: float, eps_tail: float = 1e-12
) -> float:
    """Smallest Xi with exp(-t Re psi(Xi)) <= eps_tail.

    Located by a doubling search followed by bisection; assumes Re psi is
    increasing in |xi| and unbounded, which holds for every built-in family
    except compound Poisson marks (whose law is atomic and rejected here).
    """
    if symbol.re_bounded:
        raise AtomicDistributionError(
            "atomic distribution; no density to invert"
        )
    if t <= 0.0:
        raise ValueError("time must be positive")
    log_target = math.log(1.0 / eps_tail)

    def deficit(xi: float) -> float:
        return t * float(np.real(symbol(np.asarray(xi)))) - log_target

    hi = 1.0
    while deficit(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise AtomicDistributionError(
                "characteristic exponent does not decay the transform; "
                "atomic or near-atomic distribution"
            )
    lo = 0.0 if hi == 1.0 else hi / 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if deficit(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-9 * hi:
            break
    return hi


def auto_grid(
    symbol: LevySymbol,
    t_min: float,
    dx_max: float = 0.01,
    window_min: float = 256.0,
    eps_tail: float = 1e-12,
) -> InversionGrid:
    """Grid wide and fine enough for every time >= ``t_min``.

    The cutoff honours both the tail criterion at the smallest time (smaller
    times spread the transform) and the requested spatial resolution; the
    node count is then raised until the spatial window covers
    ``window_min``.
    """
    cutoff = max(required_cutoff(symbol, t_min, eps_tail), math.pi / dx_max)
    dx = math.pi / cutoff
    n = 2**10
    while n * dx < 2.0 * window_min:
        n *= 2
    return InversionGrid(cutoff=cutoff, n_nodes=n)


class DensityEvaluator:
    """Evaluates p(t, x) for a fixed driver, at any positive time."""

    dim: int = 1
    #: support interval of the density in x (used by the convolution oracle)
    support: tuple[float, float] = (-math.inf, math.inf)

    def at(self, t: float, x) -> float:
        raise NotImplementedError

    def log_at(self, t: float, x) -> float:
        raise NotImplementedError

    def at_batch(self, t: float, xs: np.ndarray) -> np.ndarray:
        return np.array([self.at(t, x) for x in np.asarray(xs, dtype=float)])


@dataclass(frozen=True, eq=False)
class ClosedFormDensity(DensityEvaluator):
    """Closed-form transition density of a Gaussian, Cauchy or Gamma spec."""

    spec: LevySpec

    def __post_init__(self):
        if not self.spec.has_closed_form:
            # surfacing this early keeps factor construction honest
            self.spec.density(1.0, 0.5)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def support(self) -> tuple[float, float]:
        if isinstance(self.spec, GammaSpec):
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    def at(self, t: float, x) -> float:
        return self.spec.density(t, x)

    def log_at(self, t: float, x) -> float:
        return self.spec.log_density(t, x)

    def at_batch(self, t: float, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        spec = self.spec
        if isinstance(spec, GaussianSpec) and spec.dim == 1:
            var = spec.covariance[0, 0] * t
            return np.exp(-0.5 * xs * xs / var) / math.sqrt(2.0 * math.pi * var)
        if isinstance(spec, StableSpec) and spec.alpha == 1.0:
            spec = CauchySpec(theta=spec.theta)
        if isinstance(spec, CauchySpec) and spec.dim == 1:
            resid = xs - t * spec.drift[0]
            return (spec.theta * t / math.pi) / (
                spec.theta**2 * t**2 + resid * resid
            )
        if isinstance(spec, GammaSpec):
            at = spec.shape * t
            with np.errstate(divide="ignore", invalid="ignore"):
                logp = (
                    at * math.log(spec.rate)
                    - gammaln(at)
                    + (at - 1.0) * np.log(xs)
                    - spec.rate * xs
                )
            return np.where(xs > 0.0, np.exp(logp), 0.0)
        return super().at_batch(t, xs)


@dataclass(eq=False)
class _Table:
    spline: CubicSpline
    window_mass: float
    max_clamp: float
    query_window: float


@dataclass(eq=False)
class InvertedDensity(DensityEvaluator):
    """Density recovered from the symbol by FFT of exp(-t psi).

    One interpolation table is built (and cached) per requested time.  The
    spline covers |x| <= ``query_window``; beyond it the density has decayed
    below everything the price paths care about and evaluation returns 0.
    ``window_mass`` records the trapezoid integral over the full FFT window
    and ``max_clamp`` the largest negative ringing clamped to zero.
    """

    symbol: LevySymbol
    grid: InversionGrid
    eps_tail: float = 1e-12
    query_window: float | None = None
    #: cached tables are evicted oldest-first beyond this count
    max_tables: int = 256
    tables: dict[float, _Table] = field(default_factory=dict)

    def __post_init__(self):
        if self.symbol.dim != 1:
            raise GridError("numerical inversion supports dim == 1 only")

    @property
    def dim(self) -> int:
        return 1

    def _build(self, t: float) -> _Table:
        tail = math.exp(
            -t * float(np.real(self.symbol(np.asarray(self.grid.cutoff))))
        )
        if tail > self.eps_tail:
            raise CutoffError(
                f"cutoff {self.grid.cutoff:g} insufficient at t={t:g}: "
                f"|phi| = {tail:.3g} > {self.eps_tail:g} at the edge",
                required_cutoff=required_cutoff(self.symbol, t, self.eps_tail),
            )
        n = self.grid.n_nodes
        xi = self.grid.frequencies()
        phi = np.exp(-t * np.asarray(self.symbol(xi), dtype=complex))
        signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        raw = (self.grid.freq_step / (2.0 * math.pi)) * signs * np.fft.fft(
            phi * signs
        ).real
        max_clamp = max(0.0, -float(raw.min()))
        dens = np.maximum(raw, 0.0)
        x = self.grid.abscissas()
        mass = float(np.trapezoid(dens, x))
        qw = self.query_window or min(self.grid.window, 256.0)
        qw = min(qw, self.grid.window)
        keep = np.abs(x) <= qw
        spline = CubicSpline(x[keep], dens[keep])
        return _Table(
            spline=spline, window_mass=mass, max_clamp=max_clamp, query_window=qw
        )

    def _table(self, t: float) -> _Table:
        table = self.tables.get(t)
        if table is None:
            table = self._build(t)
            if len(self.tables) >= self.max_tables:
                self.tables.pop(next(iter(self.tables)))
            self.tables[t] = table
        return table

    def at(self, t: float, x) -> float:
        table = self._table(t)
        x = np.asarray(x, dtype=float)
        values = np.where(
            np.abs(x) <= table.query_window,
            np.maximum(table.spline(np.clip(x, -table.query_window, table.query_window)), 0.0),
            0.0,
        )
        return float(values) if values.ndim == 0 else values

    def log_at(self, t: float, x) -> float:
        return math.log(max(self.at(t, x), LOG_FLOOR))

    def at_batch(self, t: float, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self.at(t, np.asarray(xs, dtype=float)))

    def window_mass(self, t: float) -> float:
        return self._table(t).window_mass

    def max_clamp(self, t: float) -> float:
        return self._table(t).max_clamp


def invert(
    symbol: LevySymbol,
    t: float,
    grid: InversionGrid,
    eps_tail: float = 1e-12,
    query_window: float | None = None,
) -> InvertedDensity:
    """Inverted density evaluator with the table for time ``t`` built.

    p(t, x) = (2 pi)^{-1} Int exp(-i xi x) exp(-t psi(xi)) dxi, discretized
    on ``grid``; Hermitian symmetry of the transform makes the output real.
    Raises CutoffError (with the sufficient cutoff) when exp(-t Re psi)
    has not decayed below ``eps_tail`` at the grid edge.
    """
    if t <= 0.0:
        raise ValueError("time must be positive")
    evaluator = InvertedDensity(
        symbol=symbol, grid=grid, eps_tail=eps_tail, query_window=query_window
    )
    evaluator._table(t)
    return evaluator


def refinement_gap(
    symbol: LevySymbol,
    t: float,
    grid: InversionGrid,
    probe: np.ndarray,
    eps_tail: float = 1e-12,
) -> float:
    """Sup-gap between ``grid`` and a doubled-resolution refinement.

    The refinement halves both spacings and doubles the spatial window
    (cutoff x2, nodes x4); agreement bounds the discretization and
    interpolation error of the coarser table.
    """
    fine = InversionGrid(cutoff=2.0 * grid.cutoff, n_nodes=4 * grid.n_nodes)
    qw = float(np.max(np.abs(probe))) + 1.0
    coarse_eval = invert(symbol, t, grid, eps_tail, query_window=qw)
    fine_eval = invert(symbol, t, fine, eps_tail, query_window=qw)
    return float(
        np.max(np.abs(coarse_eval.at(t, probe) - fine_eval.at(t, probe)))
    )


def _convolve_1d(
    f: DensityEvaluator,
    s: float,
    g: DensityEvaluator,
    u: float,
    x: float,
    rel_tol: float,
) -> float:
    def integrand(y: float) -> float:
        return f.at(s, x - y) * g.at(u, y)

    f_lo = f.support[0]
    g_lo = g.support[0]
    if math.isfinite(f_lo) or math.isfinite(g_lo):
        # one-sided supports: f needs x - y >= f_lo, g needs y >= g_lo
        lo = g_lo if math.isfinite(g_lo) else -1e12
        hi = x - f_lo if math.isfinite(f_lo) else 1e12
        if hi <= lo:
            return 0.0
        return adaptive_simpson(integrand, lo, hi, rel_tol=rel_tol)
    return integrate_real_line(integrand, rel_tol=rel_tol)


def _convolve_closed_2d(
    f: ClosedFormDensity,
    s: float,
    g: ClosedFormDensity,
    u: float,
    x: np.ndarray,
    rel_tol: float,
) -> float:
    x = np.asarray(x, dtype=float)

    def outer(y1: float) -> float:
        def inner(y2: float) -> float:
            y = np.array([y1, y2])
            return f.at(s, x - y) * g.at(u, y)

        return integrate_real_line(inner, rel_tol=0.1 * rel_tol)

    return integrate_real_line(outer, rel_tol=rel_tol)


def convolve_oracle(
    f: DensityEvaluator,
    s: float,
    g: DensityEvaluator,
    u: float,
    x,
    rel_tol: float = 1e-8,
) -> float:
    """Convolution Int f(s, x - y) g(u, y) dy by adaptive quadrature.

    For transition densities of one driver this is the semigroup
    (Chapman-Kolmogorov) identity: the result equals p(s + u, x).  It is
    the independent oracle for the conditional expectation of a future
    density value, so its tolerance (default relative 1e-8) is kept tighter
    than everything it audits.  Supports dim == 1 evaluators of any kind
    and dim == 2 closed-form Gaussian/Cauchy pairs.
    """
    if f.dim != g.dim:
        raise ValueError("evaluator dimensions differ")
    if f.dim == 1:
        return _convolve_1d(f, s, g, u, float(np.asarray(x).reshape(())), rel_tol)
    if (
        f.dim == 2
        and isinstance(f, ClosedFormDensity)
        and isinstance(g, ClosedFormDensity)
    ):
        return _convolve_closed_2d(f, s, g, u, x, rel_tol)
    raise ValueError(
        "convolution oracle supports dim == 1, or dim == 2 closed forms"
    )
