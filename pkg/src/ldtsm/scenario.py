"""Scenario configuration: the JSON surface binding the library together.

A scenario holds one model block (tagged ``ldtsm``, ``hjm``, ``qtsm`` or
``shirakawa``), a simulation grid, an evaluation block (valuation times
and a maturity ladder) and a simulation block (path count, master seed).
Parsing validates every field and reports all problems at once, each
qualified by its JSON path.  ``parse(serialize(s))`` reproduces ``s``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import LambdaSchedule, LdtsmFactor, LdtsmModel
from .errors import ScenarioError
from .hjm import (
    GaussHjmModel,
    HoLee,
    InitialCurve,
    QtsmSpec,
    ShirakawaSpec,
    Vasicek,
    VolFamily,
)
from .levy import (
    CauchySpec,
    CompoundPoissonSpec,
    GammaSpec,
    GaussianSpec,
    LevySpec,
    StableSpec,
)

__all__ = [
    "Scenario",
    "parse_scenario",
    "spec_to_dict",
    "spec_from_dict",
]


def spec_to_dict(spec: LevySpec) -> dict:
    """Driver spec as a JSON object with a ``family`` tag."""
    if isinstance(spec, GaussianSpec):
        cov = spec.covariance
        return {
            "family": "gaussian",
            "covariance": float(cov[0, 0]) if spec.dim == 1 else cov.tolist(),
        }
    if isinstance(spec, CauchySpec):
        return {
            "family": "cauchy",
            "theta": spec.theta,
            "drift": float(spec.drift[0]) if spec.dim == 1 else spec.drift.tolist(),
            "dim": spec.dim,
        }
    if isinstance(spec, StableSpec):
        return {"family": "stable", "alpha": spec.alpha, "theta": spec.theta}
    if isinstance(spec, GammaSpec):
        return {"family": "gamma", "shape": spec.shape, "rate": spec.rate}
    if isinstance(spec, CompoundPoissonSpec):
        return {
            "family": "compound_poisson",
            "marks": spec.marks.tolist(),
            "intensities": spec.intensities.tolist(),
        }
    raise TypeError(f"unknown spec type {type(spec).__name__}")


class _Problems:
    def __init__(self):
        self.items: list[str] = []

    def add(self, path: str, message: str):
        self.items.append(f"{path}: {message}")

    def raise_if_any(self):
        if self.items:
            raise ScenarioError(self.items)


def _number(obj, path, errs, minimum=None, exclusive=False, default=None):
    if obj is None:
        if default is not None:
            return default
        errs.add(path, "missing required field")
        return None
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        errs.add(path, "must be a number")
        return None
    v = float(obj)
    if minimum is not None:
        if exclusive and v <= minimum:
            errs.add(path, f"must be > {minimum}")
            return None
        if not exclusive and v < minimum:
            errs.add(path, f"must be >= {minimum}")
            return None
    return v


def _number_list(obj, path, errs):
    if not isinstance(obj, list) or not obj:
        errs.add(path, "must be a nonempty array of numbers")
        return None
    out = []
    for i, v in enumerate(obj):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            errs.add(f"{path}[{i}]", "must be a number")
            return None
        out.append(float(v))
    return out


def spec_from_dict(obj: dict, path: str, errs: _Problems) -> LevySpec | None:
    """Driver spec from its JSON object; problems land in ``errs``."""
    if not isinstance(obj, dict):
        errs.add(path, "must be an object")
        return None
    family = obj.get("family")
    try:
        if family == "gaussian":
            cov = obj.get("covariance")
            if cov is None:
                errs.add(f"{path}.covariance", "missing required field")
                return None
            return GaussianSpec(np.asarray(cov, dtype=float))
        if family == "cauchy":
            theta = _number(obj.get("theta"), f"{path}.theta", errs, 0.0, True)
            if theta is None:
                return None
            dim = int(obj.get("dim", 1))
            drift = obj.get("drift", 0.0)
            return CauchySpec(
                theta=theta, drift=np.asarray(drift, dtype=float), dimension=dim
            )
        if family == "stable":
            alpha = _number(obj.get("alpha"), f"{path}.alpha", errs)
            theta = _number(obj.get("theta"), f"{path}.theta", errs, 0.0, True)
            if alpha is None or theta is None:
                return None
            if not 0.0 < alpha < 2.0:
                errs.add(f"{path}.alpha", "must lie in (0, 2)")
                return None
            return StableSpec(alpha=alpha, theta=theta)
        if family == "gamma":
            shape = _number(obj.get("shape"), f"{path}.shape", errs, 0.0, True)
            rate = _number(obj.get("rate"), f"{path}.rate", errs, 0.0, True)
            if shape is None or rate is None:
                return None
            return GammaSpec(shape=shape, rate=rate)
        if family == "compound_poisson":
            marks = _number_list(obj.get("marks"), f"{path}.marks", errs)
            nu = _number_list(obj.get("intensities"), f"{path}.intensities", errs)
            if marks is None or nu is None:
                return None
            return CompoundPoissonSpec(marks=marks, intensities=nu)
    except ValueError as exc:
        errs.add(path, str(exc))
        return None
    errs.add(f"{path}.family", f"unknown family tag {family!r}")
    return None


def _schedule_from(obj, path, errs) -> LambdaSchedule | None:
    if obj is None:
        return LambdaSchedule.constant(1.0)
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        if obj < 0:
            errs.add(path, "lambda must be nonnegative")
            return None
        return LambdaSchedule.constant(float(obj))
    if not isinstance(obj, dict):
        errs.add(path, "must be a number or {times, values} object")
        return None
    times = _number_list(obj.get("times"), f"{path}.times", errs)
    values = _number_list(obj.get("values"), f"{path}.values", errs)
    if times is None or values is None:
        return None
    for i, v in enumerate(values):
        if v < 0.0:
            errs.add(f"{path}.values[{i}]", "lambda knot must be nonnegative")
            return None
    try:
        return LambdaSchedule(times=np.asarray(times), values=np.asarray(values))
    except ValueError as exc:
        errs.add(path, str(exc))
        return None


def _curve_from(obj, path, errs) -> InitialCurve | None:
    if obj is None:
        return InitialCurve.flat(0.03)
    if not isinstance(obj, dict):
        errs.add(path, "must be an object")
        return None
    if "flat_rate" in obj:
        rate = _number(obj.get("flat_rate"), f"{path}.flat_rate", errs)
        return None if rate is None else InitialCurve.flat(rate)
    mats = _number_list(obj.get("maturities"), f"{path}.maturities", errs)
    disc = _number_list(obj.get("discounts"), f"{path}.discounts", errs)
    if mats is None or disc is None:
        return None
    try:
        return InitialCurve(maturities=np.asarray(mats), discounts=np.asarray(disc))
    except ValueError as exc:
        errs.add(path, str(exc))
        return None


def _vol_from(obj, path, errs) -> VolFamily | None:
    if not isinstance(obj, dict):
        errs.add(path, "missing or malformed volatility block")
        return None
    kind = obj.get("type")
    sigma = _number(obj.get("sigma"), f"{path}.sigma", errs, 0.0)
    if sigma is None:
        return None
    if kind == "holee":
        return HoLee(sigma=sigma)
    if kind == "vasicek":
        kappa = _number(obj.get("kappa"), f"{path}.kappa", errs, 0.0, True)
        return None if kappa is None else Vasicek(sigma=sigma, kappa=kappa)
    errs.add(f"{path}.type", f"unknown volatility type {kind!r}")
    return None


@dataclass(eq=False)
class Scenario:
    """Validated configuration plus the constructed model object."""

    model_kind: str
    model: object
    horizon: float
    step: float
    times: list[float]
    maturities: list[float]
    n_paths: int
    seed: int
    output_dir: str | None = None
    raw: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))

    def serialize(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)

    def __eq__(self, other) -> bool:
        return isinstance(other, Scenario) and self.to_dict() == other.to_dict()


def _build_model(obj, errs) -> tuple[str, object] | None:
    if not isinstance(obj, dict):
        errs.add("model", "missing required block")
        return None
    kind = obj.get("kind")
    if kind == "ldtsm":
        factors_obj = obj.get("factors")
        if not isinstance(factors_obj, list) or not factors_obj:
            errs.add("model.factors", "must be a nonempty array")
            return None
        factors = []
        for i, fobj in enumerate(factors_obj):
            fpath = f"model.factors[{i}]"
            spec = spec_from_dict(fobj, fpath, errs)
            sched = _schedule_from(fobj.get("lambda"), f"{fpath}.lambda", errs)
            if spec is None or sched is None:
                continue
            z0 = fobj.get("z0", 0.0)
            try:
                factors.append(LdtsmFactor(spec=spec, schedule=sched, z0=float(z0)))
            except ValueError as exc:
                errs.add(fpath, str(exc))
        if errs.items or not factors:
            return None
        return kind, LdtsmModel(factors=tuple(factors))
    if kind == "hjm":
        vol = _vol_from(obj.get("vol"), "model.vol", errs)
        curve = _curve_from(obj.get("initial_curve"), "model.initial_curve", errs)
        if vol is None or curve is None:
            return None
        return kind, GaussHjmModel(vol=vol, curve=curve)
    if kind == "qtsm":
        eigs0 = _number_list(obj.get("eigs0"), "model.eigs0", errs)
        eigs_inf = obj.get("eigs_inf", obj.get("eigs0"))
        eigs_inf = _number_list(eigs_inf, "model.eigs_inf", errs)
        decay = _number(obj.get("decay", 0.0), "model.decay", errs, 0.0)
        if eigs0 is None or eigs_inf is None or decay is None:
            return None
        kobj = obj.get("k", {"times": [0.0], "values": [0.0]})
        k_times = _number_list(kobj.get("times"), "model.k.times", errs)
        k_values = _number_list(kobj.get("values"), "model.k.values", errs)
        if k_times is None or k_values is None:
            return None
        try:
            spec = QtsmSpec.exponential_eigs(
                eigs0, eigs_inf, decay, k_times=k_times, k_values=k_values
            )
        except ValueError as exc:
            errs.add("model", str(exc))
            return None
        return kind, spec
    if kind == "shirakawa":
        vol = _vol_from(obj.get("vol"), "model.vol", errs)
        curve = _curve_from(obj.get("initial_curve"), "model.initial_curve", errs)
        marks = _number_list(obj.get("marks"), "model.marks", errs)
        nu = _number_list(obj.get("intensities"), "model.intensities", errs)
        scale = _number_list(obj.get("jump_scale"), "model.jump_scale", errs)
        decay = _number_list(obj.get("jump_decay"), "model.jump_decay", errs)
        if None in (vol, curve, marks, nu, scale, decay):
            return None
        try:
            spec = ShirakawaSpec(
                vol=vol,
                curve=curve,
                marks=marks,
                intensities=nu,
                jump_scale=scale,
                jump_decay=decay,
            )
        except ValueError as exc:
            errs.add("model", str(exc))
            return None
        return kind, spec
    errs.add("model.kind", f"unknown model kind {kind!r}")
    return None


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario from JSON text.

    Raises ScenarioError carrying one field-path-qualified message per
    problem found (unknown tags, violated invariants, missing fields).
    """
    errs = _Problems()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"$: not valid JSON ({exc.msg} at line {exc.lineno})"])
    if not isinstance(raw, dict):
        raise ScenarioError(["$: top level must be an object"])

    built = _build_model(raw.get("model"), errs)

    grid = raw.get("grid", {})
    horizon = _number(grid.get("horizon"), "grid.horizon", errs, 0.0, True, default=1.0)
    step = _number(grid.get("step"), "grid.step", errs, 0.0, True, default=0.01)
    if horizon is not None and step is not None:
        n = horizon / step
        if abs(n - round(n)) > 1e-9:
            errs.add("grid.step", "must divide grid.horizon")

    ev = raw.get("evaluation", {})
    times = ev.get("times", [0.0])
    times = _number_list(times, "evaluation.times", errs) or []
    for i, t in enumerate(times):
        if t < 0.0:
            errs.add(f"evaluation.times[{i}]", "must be nonnegative")
    mats = ev.get("maturities")
    if mats is None:
        mats = [round(0.1 * i, 10) for i in range(1, 11)]
    mats = _number_list(mats, "evaluation.maturities", errs) or []
    if mats and any(b <= a for a, b in zip(mats, mats[1:])):
        errs.add("evaluation.maturities", "must be strictly increasing")

    sim = raw.get("simulation", {})
    n_paths = sim.get("paths", 1000)
    if not isinstance(n_paths, int) or n_paths < 1:
        errs.add("simulation.paths", "must be a positive integer")
        n_paths = 1
    seed = sim.get("seed", 42)
    if not isinstance(seed, int) or seed < 0:
        errs.add("simulation.seed", "must be a nonnegative integer")
        seed = 0

    output = raw.get("output", {})
    out_dir = output.get("dir") if isinstance(output, dict) else None

    errs.raise_if_any()
    kind, model = built
    return Scenario(
        model_kind=kind,
        model=model,
        horizon=horizon,
        step=step,
        times=times,
        maturities=mats,
        n_paths=n_paths,
        seed=seed,
        output_dir=out_dir,
        raw=raw,
    )
