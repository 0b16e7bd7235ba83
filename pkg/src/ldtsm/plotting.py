"""Figure rendering for the CLI report path.

Every figure lands next to its CSV so a run leaves a self-contained
directory of delimited data plus plots.  Rendering is headless (Agg).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "save_curve_figure",
    "save_density_figure",
    "save_paths_figure",
    "save_evolution_figure",
    "save_calibration_figure",
    "save_validation_figure",
]


def save_curve_figure(path: str, curves: list[tuple[float, np.ndarray, np.ndarray, np.ndarray]]):
    """Discount and forward curves, one line per valuation time."""
    fig, (ax_p, ax_f) = plt.subplots(1, 2, figsize=(10, 4))
    for t, mats, prices, fwds in curves:
        ax_p.plot(mats, prices, marker=".", label=f"t={t:g}")
        ax_f.plot(mats, fwds, marker=".", label=f"t={t:g}")
    ax_p.set_xlabel("maturity T")
    ax_p.set_ylabel("$P_t^T$")
    ax_p.set_title("discount curve")
    ax_f.set_xlabel("maturity T")
    ax_f.set_ylabel("f(t, T)")
    ax_f.set_title("instantaneous forward curve")
    for ax in (ax_p, ax_f):
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_density_figure(path: str, x: np.ndarray, p: np.ndarray, label: str):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(x, p)
    ax.set_xlabel("x")
    ax.set_ylabel("p(t, x)")
    ax.set_title(label)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_paths_figure(path: str, times: np.ndarray, paths: list[np.ndarray], ylabel: str):
    fig, ax = plt.subplots(figsize=(7, 4))
    for values in paths:
        ax.plot(times, values, lw=0.9, alpha=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_title(f"{len(paths)} sample paths")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_evolution_figure(path: str, rows: list[tuple[float, float, float]]):
    """Bond curve snapshots along one path: lines of P over T, one per t."""
    fig, ax = plt.subplots(figsize=(7, 4))
    by_t: dict[float, list[tuple[float, float]]] = {}
    for t, T, p in rows:
        by_t.setdefault(t, []).append((T, p))
    for t in sorted(by_t):
        pts = sorted(by_t[t])
        ax.plot([a for a, _ in pts], [b for _, b in pts], marker=".", label=f"t={t:g}")
    ax.set_xlabel("maturity T")
    ax.set_ylabel("$P_t^T$")
    ax.set_title("curve evolution along path 0")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_calibration_figure(
    path: str,
    knot_times: np.ndarray,
    knot_values: np.ndarray,
    maturities: np.ndarray,
    residuals: np.ndarray,
):
    fig, (ax_l, ax_r) = plt.subplots(1, 2, figsize=(10, 4))
    ax_l.plot(knot_times, knot_values, marker="o")
    ax_l.set_xlabel("t")
    ax_l.set_ylabel("lambda(t)")
    ax_l.set_title("fitted time change")
    ax_r.stem(maturities, residuals)
    ax_r.set_xlabel("maturity")
    ax_r.set_ylabel("price residual")
    ax_r.set_title("calibration residuals")
    for ax in (ax_l, ax_r):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_validation_figure(path: str, reports):
    """Z-scores (MC tests) and log10 relative errors (deterministic)."""
    mc = [r for r in reports if r.kind == "mc"]
    det = [r for r in reports if r.kind != "mc"]
    fig, (ax_z, ax_d) = plt.subplots(
        1, 2, figsize=(12, 0.35 * max(len(mc), len(det)) + 2.5)
    )
    if mc:
        names = [f"{r.name}:{r.model}" for r in mc]
        zs = [r.z_score if r.z_score is not None else 0.0 for r in mc]
        colors = ["tab:blue" if r.passed else "tab:red" for r in mc]
        ax_z.barh(names, zs, color=colors)
        ax_z.axvline(-3, color="k", ls="--", lw=0.8)
        ax_z.axvline(3, color="k", ls="--", lw=0.8)
        ax_z.set_xlabel("z-score (pass band +/-3)")
    if det:
        names = [f"{r.name}:{r.model}" for r in det]
        vals = [np.log10(max(r.rel_error, 1e-18)) for r in det]
        tols = [np.log10(r.tolerance) for r in det]
        colors = ["tab:blue" if r.passed else "tab:red" for r in det]
        ax_d.barh(names, vals, color=colors)
        for i, tl in enumerate(tols):
            ax_d.plot([tl, tl], [i - 0.4, i + 0.4], "k--", lw=0.8)
        ax_d.set_xlabel("log10 relative error (dashed: tolerance)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
