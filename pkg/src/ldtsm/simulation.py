"""Sample-path generation for every driver family.

All families have exactly sampleable increment laws, so paths are built
from exact increments rather than an Euler scheme; the grid exists for
the stochastic integrals of the forward-rate models and for curve
evolution dumps.  Seeding is counter-based: the stream for path ``k`` is
derived by mixing (master_seed, k, stream) through numpy's SeedSequence,
so results are bit-identical for any worker count or scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import LdtsmModel
from .errors import GridError
from .hjm import BrownianPath
from .levy import (
    CauchySpec,
    CompoundPoissonSpec,
    GammaSpec,
    GaussianSpec,
    LevySpec,
    StableSpec,
)

__all__ = [
    "PathGrid",
    "SamplePath",
    "path_rng",
    "sample_increments",
    "simulate",
    "simulate_poisson_measure",
    "brownian_path",
    "map_indexed",
    "worker_count",
]

#: per-path sub-stream used for a factor's jump record
JUMP_STREAM_OFFSET = 1 << 20


@dataclass(frozen=True)
class PathGrid:
    """Uniform time grid 0, dt, ..., horizon."""

    horizon: float
    step: float

    def __post_init__(self):
        if self.step <= 0.0 or self.horizon <= 0.0:
            raise GridError("horizon and step must be positive")
        n = self.horizon / self.step
        if abs(n - round(n)) > 1e-9:
            raise GridError("step must divide the horizon")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)


@dataclass(frozen=True, eq=False)
class SamplePath:
    """States of each factor on the grid, plus jump records where the
    factor is event-driven (compound Poisson marks)."""

    grid: PathGrid
    states: tuple
    jumps: tuple

    def factor_state(self, factor: int, t: float):
        times = self.grid.times()
        idx = int(np.searchsorted(times, t - 1e-12))
        if idx >= times.size or abs(times[idx] - t) > 1e-9:
            raise GridError(f"no grid node at t={t:g}")
        return self.states[factor][idx]


def path_rng(master_seed: int, path_index: int, stream: int = 0) -> np.random.Generator:
    """Deterministic per-path generator, independent of execution order."""
    seq = np.random.SeedSequence((int(master_seed), int(path_index), int(stream)))
    return np.random.Generator(np.random.PCG64(seq))


def _stable_standard(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Standard symmetric alpha-stable variates (cf exp(-|xi|^alpha))
    by the Chambers-Mallows-Stuck transform; alpha = 1 reduces to the
    tangent of a uniform angle."""
    v = math.pi * (rng.random(n) - 0.5)
    if alpha == 1.0:
        return np.tan(v)
    w = rng.exponential(1.0, n)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )


def sample_increments(
    spec: LevySpec, duration: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n independent draws with the law of Z_duration.

    Shape (n,) for scalar families, (n, d) for multivariate ones.
    Compound Poisson increments aggregate the per-mark Poisson counts;
    use `simulate_poisson_measure` when the event times are needed.
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if isinstance(spec, GaussianSpec):
        z = rng.standard_normal((n, spec.dim))
        out = z @ (math.sqrt(duration) * spec.cholesky.T)
        return out[:, 0] if spec.dim == 1 else out
    if isinstance(spec, CauchySpec):
        drift = duration * spec.drift
        if spec.dim == 1:
            angles = math.pi * (rng.random(n) - 0.5)
            return spec.theta * duration * np.tan(angles) + drift[0]
        normals = rng.standard_normal((n, spec.dim))
        denom = np.abs(rng.standard_normal(n))
        return spec.theta * duration * normals / denom[:, None] + drift
    if isinstance(spec, StableSpec):
        scale = (spec.theta * duration) ** (1.0 / spec.alpha)
        return scale * _stable_standard(spec.alpha, n, rng)
    if isinstance(spec, GammaSpec):
        return rng.gamma(spec.shape * duration, 1.0 / spec.rate, n)
    if isinstance(spec, CompoundPoissonSpec):
        counts = rng.poisson(spec.intensities * duration, (n, spec.marks.size))
        return counts @ spec.marks
    raise TypeError(f"cannot sample increments of {type(spec).__name__}")


def simulate_poisson_measure(
    marks,
    intensities,
    horizon: float,
    rng: np.random.Generator,
) -> list[tuple[float, int]]:
    """Event record of a finite-mark Poisson random measure on [0, horizon].

    Per mark j the count is Poisson(nu_j * horizon) with uniformly placed,
    sorted times, which makes counts over disjoint intervals independent
    Poisson variables.  Events of all marks are merged in time order.
    """
    marks = np.atleast_1d(np.asarray(marks, dtype=float))
    nu = np.atleast_1d(np.asarray(intensities, dtype=float))
    events: list[tuple[float, int]] = []
    for j in range(marks.size):
        if nu[j] == 0.0:
            continue
        count = rng.poisson(nu[j] * horizon)
        times = np.sort(rng.uniform(0.0, horizon, count))
        events.extend((float(s), j) for s in times)
    events.sort(key=lambda e: e[0])
    return events


def _factor_path(
    spec: LevySpec, z0, grid: PathGrid, rng: np.random.Generator, jump_rng
) -> tuple[np.ndarray, tuple]:
    n = grid.n_steps
    if isinstance(spec, CompoundPoissonSpec):
        events = simulate_poisson_measure(
            spec.marks, spec.intensities, grid.horizon, jump_rng
        )
        times = grid.times()
        states = np.full(n + 1, float(np.asarray(z0).reshape(())))
        for s, j in events:
            states[np.searchsorted(times, s, side="left"):] += spec.marks[j]
        return states, tuple(events)
    incs = sample_increments(spec, grid.step, n, rng)
    if incs.ndim == 1:
        states = np.empty(n + 1)
        states[0] = float(np.asarray(z0).reshape(()))
        np.cumsum(incs, out=states[1:])
        states[1:] += states[0]
    else:
        z0v = np.atleast_1d(np.asarray(z0, dtype=float))
        states = np.vstack([np.zeros(spec.dim), np.cumsum(incs, axis=0)]) + z0v
    return states, ()


def simulate(
    model: LdtsmModel | LevySpec,
    grid: PathGrid,
    master_seed: int,
    path_index: int,
) -> SamplePath:
    """One sample path of all factors of ``model`` on ``grid``.

    Increments over each step are independent with the exact law of
    Z_step: Gaussian by covariance factorization, Cauchy and symmetric
    stable by the Chambers-Mallows-Stuck transform, Gamma by gamma-variate
    generation, compound Poisson by per-mark event simulation.  Factor
    ``l`` of path ``k`` draws from the stream (master_seed, k, l), so the
    same arguments give bit-identical paths under any parallel schedule.
    """
    if isinstance(model, LevySpec):
        pairs = [(model, 0.0)]
    else:
        pairs = [(f.spec, f.z0) for f in model.factors]
    states = []
    jumps = []
    for l, (spec, z0) in enumerate(pairs):
        rng = path_rng(master_seed, path_index, stream=l)
        jrng = path_rng(master_seed, path_index, stream=JUMP_STREAM_OFFSET + l)
        s, j = _factor_path(spec, z0, grid, rng, jrng)
        states.append(s)
        jumps.append(j)
    return SamplePath(grid=grid, states=tuple(states), jumps=tuple(jumps))


def brownian_path(
    grid: PathGrid, master_seed: int, path_index: int, stream: int = 0
) -> BrownianPath:
    """Standard scalar Brownian path for the forward-rate models."""
    rng = path_rng(master_seed, path_index, stream)
    incs = math.sqrt(grid.step) * rng.standard_normal(grid.n_steps)
    values = np.concatenate([[0.0], np.cumsum(incs)])
    return BrownianPath(times=grid.times(), values=values)


def worker_count() -> int:
    """Worker override from the environment (LDTSM_WORKERS), default 1."""
    value = os.environ.get("LDTSM_WORKERS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def map_indexed(
    fn: Callable[[int], object], n: int, workers: int | None = None
) -> list:
    """[fn(0), ..., fn(n-1)], optionally fanned out over threads.

    Each call must depend only on its index (true for per-path seeded
    simulation), so the result is independent of the worker count.
    """
    if workers is None:
        workers = worker_count()
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))
