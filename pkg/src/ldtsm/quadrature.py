"""Numerical integration used by the oracle machinery.

The convolution and compensator oracles are deliberately kept independent
of the code paths they audit, so the quadrature here is self-contained:
adaptive Simpson with Richardson error control on finite intervals, plus a
tangent change of variables for integrals over the whole real line.  The
tangent substitution (rather than a tanh map) keeps the transformed
integrand bounded for heavy-tailed, polynomially decaying densities.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import QuadratureError

__all__ = [
    "adaptive_simpson",
    "integrate_real_line",
    "gauss_hermite_nodes",
    "gauss_hermite_expectation",
]

_MAX_EVALS = 500_000


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-14,
    max_evals: int = _MAX_EVALS,
) -> float:
    """Integral of ``f`` on [a, b] by adaptive Simpson bisection.

    Raises QuadratureError (carrying the last estimate and its error bound)
    if the evaluation budget is exhausted before the interval-wise
    Richardson error estimates fall below tolerance.
    """
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    evals = 3
    # stack holds (a, b, fa, fm, fb, simpson(a,b), depth)
    stack = [(a, b, fa, fm, fb, whole, 0)]
    total = 0.0
    err_acc = 0.0
    scale = max(abs(whole), abs_tol)
    while stack:
        xa, xb, ya, ym, yb, s_whole, depth = stack.pop()
        xm = 0.5 * (xa + xb)
        xlm = 0.5 * (xa + xm)
        xrm = 0.5 * (xm + xb)
        ylm, yrm = f(xlm), f(xrm)
        evals += 2
        s_left = (xm - xa) / 6.0 * (ya + 4.0 * ylm + ym)
        s_right = (xb - xm) / 6.0 * (ym + 4.0 * yrm + yb)
        s2 = s_left + s_right
        err = (s2 - s_whole) / 15.0
        local_tol = rel_tol * scale * (xb - xa) / (b - a) + abs_tol
        if abs(err) <= local_tol or depth >= 60:
            total += s2 + err
            err_acc += abs(err)
            continue
        if evals > max_evals:
            partial = total + s2 + sum(item[5] for item in stack)
            raise QuadratureError(
                f"adaptive Simpson exhausted {max_evals} evaluations",
                estimate=partial,
                error_bound=err_acc + abs(err),
            )
        stack.append((xa, xm, ya, ylm, ym, s_left, depth + 1))
        stack.append((xm, xb, ym, yrm, yb, s_right, depth + 1))
        scale = max(scale, abs(total))
    return total


def integrate_real_line(
    f: Callable[[float], float],
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-14,
    max_evals: int = _MAX_EVALS,
) -> float:
    """Integral of ``f`` over R via y = tan(w), w in (-pi/2, pi/2)."""
    edge = 0.5 * math.pi - 1e-9  # tan(edge) ~ 1e9; beyond that f must vanish

    def transformed(w: float) -> float:
        y = math.tan(w)
        c = math.cos(w)
        return f(y) / (c * c)

    return adaptive_simpson(
        transformed, -edge, edge, rel_tol=rel_tol, abs_tol=abs_tol, max_evals=max_evals
    )


def gauss_hermite_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for E[f(X)], X ~ N(0, 1)."""
    nodes, weights = np.polynomial.hermite.hermgauss(n)
    return nodes * math.sqrt(2.0), weights / math.sqrt(math.pi)


def gauss_hermite_expectation(
    f: Callable[[np.ndarray], float],
    dim: int,
    tol: float = 1e-10,
    start: int = 24,
    max_nodes: int = 400,
) -> float:
    """E[f(X)], X ~ N(0, I_dim), by tensorized Gauss-Hermite quadrature.

    Doubles the per-axis node count until two successive levels agree to
    ``tol`` (relative on values of order one).  Limited to dim <= 3.
    """
    if dim > 3:
        raise ValueError("tensorized Gauss-Hermite is limited to dim <= 3")

    def level(n: int) -> float:
        x, w = gauss_hermite_nodes(n)
        grids = np.meshgrid(*([x] * dim), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([w] * dim), indexing="ij")
        wts = np.ones(pts.shape[0])
        for g in wgrids:
            wts = wts * g.ravel()
        return float(sum(wts[i] * f(pts[i]) for i in range(pts.shape[0])))

    n = start
    prev = level(n)
    while n <= max_nodes:
        n *= 2
        cur = level(n)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(
        f"Gauss-Hermite levels did not stabilize below n={max_nodes}",
        estimate=prev,
        error_bound=abs(cur - prev),
    )
