"""Command-line surface: curve, simulate, validate, calibrate, density.

Every subcommand reads a JSON scenario (--config), writes delimited output
into --out, and renders a matplotlib figure next to each CSV unless
--no-plot is given.  Numeric CSV fields carry 17 significant digits so
downstream diffs are bit-stable; the worker count for path generation can
be overridden with the LDTSM_WORKERS environment variable without
changing any output byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .core import (
    LdtsmModel,
    StateSnapshot,
    bond_price,
    calibrate_lambda,
    forward_rate,
)
from .density import ClosedFormDensity, InversionGrid, InvertedDensity, auto_grid
from .errors import LdtsmError, ScenarioError
from .hjm import (
    GaussHjmModel,
    QtsmSpec,
    ShirakawaSpec,
    gauss_bond,
    gauss_forward,
    qtsm_bond,
    qtsm_forward,
    shirakawa_bond,
    shirakawa_forward,
)
from .levy import GaussianSpec, symbol
from .scenario import Scenario, parse_scenario
from .simulation import (
    PathGrid,
    brownian_path,
    map_indexed,
    path_rng,
    simulate,
    simulate_poisson_measure,
    worker_count,
)
from .validation import default_suite, martingale_test, suite_passed


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _load_scenario(args) -> Scenario:
    if not args.config:
        raise ScenarioError(["--config: required for this subcommand"])
    cfg = Path(args.config)
    if not cfg.exists():
        raise ScenarioError([f"--config: file {cfg} does not exist"])
    return parse_scenario(cfg.read_text())


def _out_dir(args, scenario: Scenario | None = None) -> Path:
    out = args.out or (scenario.output_dir if scenario else None) or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


class _ScenarioPricer:
    """Price and forward-rate closures for one scenario.

    States at t > 0 come from the seeded path with index 0, so repeated
    runs are reproducible.
    """

    def __init__(self, sc: Scenario, grid: PathGrid, seed: int):
        self.sc = sc
        self.grid = grid
        self.seed = seed
        self._path = None
        self._jumps = None

    def _ldtsm_state(self, t: float) -> StateSnapshot:
        if t == 0.0:
            return self.sc.model.initial_state()
        if self._path is None:
            self._path = simulate(self.sc.model, self.grid, self.seed, 0)
        states = tuple(
            self._path.factor_state(l, t) for l in range(len(self.sc.model.factors))
        )
        return StateSnapshot(time=t, states=states)

    def _brownian(self):
        if self._path is None:
            self._path = brownian_path(self.grid, self.seed, 0)
        return self._path

    def _jump_record(self):
        if self._jumps is None:
            model = self.sc.model
            self._jumps = simulate_poisson_measure(
                model.marks,
                model.intensities,
                self.grid.horizon,
                path_rng(self.seed, 0, stream=1),
            )
        return self._jumps

    def price(self, t: float, T: float) -> float:
        model = self.sc.model
        if isinstance(model, LdtsmModel):
            return bond_price(model, self._ldtsm_state(t), T)
        if isinstance(model, GaussHjmModel):
            return gauss_bond(model.vol, model.curve, self._brownian(), t, T)
        if isinstance(model, QtsmSpec):
            return qtsm_bond(model, self._qtsm_state(t), t, T)
        return shirakawa_bond(model, self._brownian(), self._jump_record(), t, T)

    def forward(self, t: float, T: float) -> float:
        model = self.sc.model
        if isinstance(model, LdtsmModel):
            return forward_rate(model, self._ldtsm_state(t), T)
        if isinstance(model, GaussHjmModel):
            return gauss_forward(model.vol, model.curve, self._brownian(), t, T)
        if isinstance(model, QtsmSpec):
            return qtsm_forward(model, self._qtsm_state(t), t, T)
        return shirakawa_forward(model, self._brownian(), self._jump_record(), t, T)

    def _qtsm_state(self, t: float):
        model = self.sc.model
        if t == 0.0:
            return np.zeros(model.dim)
        if self._path is None:
            self._path = simulate(
                GaussianSpec(np.eye(model.dim)), self.grid, self.seed, 0
            )
        return self._path.factor_state(0, t)


def _cmd_curve(args) -> int:
    sc = _load_scenario(args)
    out = _out_dir(args, sc)
    grid = PathGrid(sc.horizon, sc.step)
    pricer = _ScenarioPricer(sc, grid, args.seed if args.seed is not None else sc.seed)
    curves = []
    for t in sc.times:
        mats = np.array([T for T in sc.maturities if T >= t])
        prices = np.array([pricer.price(t, T) for T in mats])
        fwds = np.array([pricer.forward(t, T) for T in mats])
        _write_csv(
            out / f"curve_t{t:g}.csv",
            ["T", "P", "forward_rate"],
            zip(mats, prices, fwds),
        )
        curves.append((t, mats, prices, fwds))
    if not args.no_plot:
        plotting.save_curve_figure(str(out / "curve.png"), curves)
    print(f"wrote {len(curves)} curve file(s) to {out}")
    return 0


def _path_columns(sc: Scenario, grid: PathGrid, seed: int, k: int):
    """(state matrix with one column per component, jump events or None)."""
    model = sc.model
    if isinstance(model, LdtsmModel):
        sp = simulate(model, grid, seed, k)
        cols = [
            np.atleast_2d(s.T).T if s.ndim > 1 else s[:, None] for s in sp.states
        ]
        return np.hstack(cols), None
    if isinstance(model, QtsmSpec):
        sp = simulate(GaussianSpec(np.eye(model.dim)), grid, seed, k)
        s = sp.states[0]
        return (s[:, None] if s.ndim == 1 else s), None
    path = brownian_path(grid, seed, k)
    events = None
    if isinstance(model, ShirakawaSpec):
        events = simulate_poisson_measure(
            model.marks, model.intensities, grid.horizon,
            path_rng(seed, k, stream=1),
        )
    return path.values[:, None], events


def _cmd_simulate(args) -> int:
    sc = _load_scenario(args)
    out = _out_dir(args, sc)
    step = sc.horizon / args.steps if args.steps else sc.step
    grid = PathGrid(sc.horizon, step)
    seed = args.seed if args.seed is not None else sc.seed
    n_paths = args.paths if args.paths is not None else sc.n_paths
    dump = min(n_paths, args.dump_paths)

    results = map_indexed(
        lambda k: _path_columns(sc, grid, seed, k), dump, workers=worker_count()
    )
    times = grid.times()
    n_cols = results[0][0].shape[1]
    header = ["path", "t"] + [f"Z{i + 1}" for i in range(n_cols)]
    rows = []
    for k, (states, _) in enumerate(results):
        for i, t in enumerate(times):
            rows.append([k, t, *states[i]])
    _write_csv(out / "paths.csv", header, rows)

    if isinstance(sc.model, ShirakawaSpec):
        jump_rows = []
        for k, (_, events) in enumerate(results):
            for s, j in events or ():
                jump_rows.append([k, s, j])
        _write_csv(out / "jumps.csv", ["path", "time", "mark"], jump_rows)

    pricer = _ScenarioPricer(sc, grid, seed)
    evo_rows = []
    for t in sc.times:
        for T in sc.maturities:
            if T >= t:
                evo_rows.append((t, T, pricer.price(t, T)))
    _write_csv(out / "evolution.csv", ["t", "T", "P"], evo_rows)

    if not args.no_plot:
        plotting.save_paths_figure(
            str(out / "paths.png"),
            times,
            [states[:, 0] for states, _ in results],
            "Z(t)",
        )
        plotting.save_evolution_figure(str(out / "evolution.png"), evo_rows)
    print(
        f"wrote {dump} path(s) and {len(evo_rows)} curve-evolution rows to {out} "
        f"(workers={worker_count()})"
    )
    return 0


def _cmd_validate(args) -> int:
    sc = None
    if args.config:
        sc = _load_scenario(args)
    out = _out_dir(args, sc)
    n_paths = args.paths if args.paths is not None else 100_000
    seed = args.seed if args.seed is not None else 20260809
    reports = default_suite(n_paths=n_paths, seed=seed)
    if sc is not None and isinstance(sc.model, LdtsmModel):
        reports.append(
            martingale_test(sc.model, min(1.0, sc.horizon), n_paths, seed + 9001)
        )
    with open(out / "report.jsonl", "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")
    lines = [r.summary_line() for r in reports]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    if not args.no_plot:
        plotting.save_validation_figure(str(out / "validation.png"), reports)
    ok = suite_passed(reports)
    print(f"{'all tests passed' if ok else 'FAILURES present'} ({len(reports)} tests)")
    return 0 if ok else 1


def _read_market_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        if header[:2] not in (["t", "price"], ["t", "p"]):
            raise ScenarioError(
                [f"{path}: expected header T,price; found {','.join(header)}"]
            )
        mats, prices = [], []
        for row in reader:
            if not row:
                continue
            mats.append(float(row[0]))
            prices.append(float(row[1]))
    return np.array(mats), np.array(prices)


def _cmd_calibrate(args) -> int:
    sc = _load_scenario(args)
    if not isinstance(sc.model, LdtsmModel) or len(sc.model.factors) != 1:
        raise ScenarioError(
            ["model: calibration needs a single-factor density-ratio model"]
        )
    if not args.market:
        raise ScenarioError(["--market: required CSV of quoted T,price pairs"])
    out = _out_dir(args, sc)
    mats, prices = _read_market_csv(Path(args.market))
    factor = sc.model.factors[0]
    result = calibrate_lambda(
        factor.spec,
        factor.z0,
        mats,
        prices,
        lam0=factor.schedule(0.0),
        tol=args.tol,
        density=factor.density,
    )
    schedule = result.schedule
    payload = {
        "times": schedule.times.tolist(),
        "values": schedule.values.tolist(),
        "monotone_discount": result.monotone_discount,
        "max_abs_residual": float(np.max(np.abs(result.residuals))),
    }
    import json

    (out / "lambda.json").write_text(json.dumps(payload, indent=2) + "\n")
    fitted = prices + result.residuals
    _write_csv(
        out / "residuals.csv",
        ["T", "price", "fitted", "residual"],
        zip(mats, prices, fitted, result.residuals),
    )
    if not args.no_plot:
        plotting.save_calibration_figure(
            str(out / "calibration.png"),
            schedule.times,
            schedule.values,
            mats,
            result.residuals,
        )
    print(
        f"calibrated {mats.size} knot(s); max |residual| = "
        f"{np.max(np.abs(result.residuals)):.3e}; wrote {out}/lambda.json"
    )
    return 0


def _cmd_density(args) -> int:
    sc = _load_scenario(args)
    if not isinstance(sc.model, LdtsmModel):
        raise ScenarioError(["model: the density subcommand needs an ldtsm model"])
    spec = sc.model.factors[0].spec
    t = args.t
    if spec.has_closed_form and not args.invert:
        evaluator = ClosedFormDensity(spec)
        label = f"{spec.family} density, closed form, t={t:g}"
    else:
        sym = symbol(spec)
        if args.cutoff and args.nodes:
            grid = InversionGrid(cutoff=args.cutoff, n_nodes=args.nodes)
        else:
            # a wide window keeps heavy-tail aliasing below the 1e-6 the
            # dump is compared at
            grid = auto_grid(
                sym, t_min=t, window_min=max(4.0 * args.xmax, 4096.0)
            )
        evaluator = InvertedDensity(
            symbol=sym, grid=grid, query_window=max(2.0 * args.xmax, 32.0)
        )
        label = (
            f"{spec.family} density, inverted (cutoff={grid.cutoff:g}, "
            f"N={grid.n_nodes}), t={t:g}"
        )
    out = _out_dir(args, sc)
    x = np.linspace(-args.xmax, args.xmax, args.points)
    p = evaluator.at_batch(t, x)
    _write_csv(out / "density.csv", ["x", "p"], zip(x, p))
    if not args.no_plot:
        plotting.save_density_figure(str(out / "density.png"), x, p, label)
    print(f"wrote {x.size} density samples to {out}/density.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldtsm",
        description=(
            "Term-structure models scaled by Levy transition densities: "
            "curve evaluation, path simulation, statistical validation, "
            "time-change calibration and density dumps.  Path generation "
            "honours the LDTSM_WORKERS environment variable (default 1); "
            "outputs do not depend on the worker count."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool = True):
        p.add_argument("--config", help="scenario JSON file", required=False)
        p.add_argument("--out", help="output directory (default: scenario output.dir or ./out)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p_curve = sub.add_parser("curve", help="discount and forward curves per valuation time")
    common(p_curve)
    p_curve.set_defaults(func=_cmd_curve)

    p_sim = sub.add_parser("simulate", help="sample paths and curve evolution")
    common(p_sim)
    p_sim.add_argument("--paths", type=int, default=None, help="number of paths")
    p_sim.add_argument("--steps", type=int, default=None, help="grid steps over the horizon")
    p_sim.add_argument(
        "--dump-paths", type=int, default=10, help="paths written to paths.csv (default 10)"
    )
    p_sim.set_defaults(func=_cmd_simulate)

    p_val = sub.add_parser("validate", help="run the statistical validation suite")
    common(p_val, config_required=False)
    p_val.add_argument("--paths", type=int, default=None, help="MC paths per test (default 100000)")
    p_val.set_defaults(func=_cmd_validate)

    p_cal = sub.add_parser("calibrate", help="fit the time change to quoted discounts")
    common(p_cal)
    p_cal.add_argument("--market", help="CSV of quoted T,price pairs")
    p_cal.add_argument("--tol", type=float, default=1e-10, help="bisection tolerance on lambda")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_den = sub.add_parser("density", help="dump p(t, x) samples as x,p CSV")
    common(p_den)
    p_den.add_argument("--t", type=float, default=1.0, help="time argument (default 1)")
    p_den.add_argument("--xmax", type=float, default=10.0, help="dump window half-width")
    p_den.add_argument("--points", type=int, default=2001, help="number of samples")
    p_den.add_argument("--cutoff", type=float, default=None, help="frequency cutoff (with --nodes)")
    p_den.add_argument("--nodes", type=int, default=None, help="FFT nodes, power of two (with --cutoff)")
    p_den.add_argument(
        "--invert", action="store_true", help="force Fourier inversion even with a closed form"
    )
    p_den.set_defaults(func=_cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    except LdtsmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
