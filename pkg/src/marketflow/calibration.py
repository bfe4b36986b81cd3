"""Fitting free model parameters to observed share trajectories.

The objective is mean squared error between observed market shares and the
simulated shares at the nearest recorded step. Search is derivative-free:
simplex descent (Nelder-Mead) restarted from seeded random points inside
the box constraints, with every candidate projected into its box before a
simulation runs. The objective is cheap but at best piecewise-smooth (the
winner-take-all delta switches discontinuously), which is exactly where
gradient methods mislead and a budgeted simplex does not.

Identifiability is not guaranteed, so the result carries a sensitivity
table: the loss under a +/-5% perturbation of each fitted parameter at the
optimum, making flat directions visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, minimize

from .core import AttributePanel, BehaviorParams, ModelError, Trajectory
from .dynamics import simulate

_BEHAVIOR_PARAMS = {"wta": "wta", "s": "stickiness", "k": "decay",
                    "gamma": "gamma", "c": "c"}
_IMP_PREFIX = "imp."


@dataclass(frozen=True)
class ParamSpec:
    """One fittable parameter: its box, starting point, and fixed flag.

    Names: ``wta``, ``s`` (stickiness), ``k`` (decay), ``gamma``, ``c``,
    or ``imp.<attribute>`` for a latent market-wide importance score.
    """

    name: str
    lower: float
    upper: float
    initial: float
    fixed: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ModelError(
                f"infeasible box for {self.name}: lower {self.lower} > upper {self.upper}")
        if not self.lower <= self.initial <= self.upper:
            raise ModelError(
                f"initial {self.initial} for {self.name} outside "
                f"[{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class FitResult:
    """Outcome of a fit: best parameters and how the search got there."""

    best: dict
    loss: float
    trace: tuple
    evaluations: int
    converged: bool
    seed: int
    sensitivity: dict

    def to_tree(self) -> dict:
        return {
            "best": dict(self.best),
            "loss": self.loss,
            "trace": list(self.trace),
            "evaluations": self.evaluations,
            "converged": self.converged,
            "seed": self.seed,
            "sensitivity": {k: list(v) for k, v in self.sensitivity.items()},
        }


def default_param_specs(doc, names=("wta", "s", "k", "gamma", "c")) -> list:
    """Sensible free boxes for the named parameters of a scenario.

    Each box is the parameter's full domain (gamma capped at [-20, -1e-3],
    c at [0, 2], importance at the positive part of the scale) and the
    initial value is the scenario's current setting.
    """
    b = doc.behavior
    scale = doc.panel.scale
    specs = []
    for name in names:
        if name in _BEHAVIOR_PARAMS:
            current = getattr(b, _BEHAVIOR_PARAMS[name])
            lower, upper = {
                "wta": (0.0, 1.0), "s": (0.0, 1.0), "k": (0.0, 50.0),
                "gamma": (-20.0, -1e-3), "c": (0.0, 2.0),
            }[name]
            initial = min(max(current, lower), upper)
        elif name.startswith(_IMP_PREFIX):
            attr = name[len(_IMP_PREFIX):]
            if attr not in doc.panel.attributes:
                raise ModelError(f"unknown attribute in parameter name {name!r}")
            z = doc.panel.attributes.index(attr)
            lower = max(scale.s_min, 1e-3)
            upper = scale.s_max
            initial = min(max(float(np.mean(doc.panel.imp[:, :, z])), lower), upper)
        else:
            raise ModelError(f"unknown parameter name {name!r}")
        specs.append(ParamSpec(name=name, lower=lower, upper=upper, initial=initial))
    return specs


def parse_param_specs(tree, doc) -> list:
    """Build ParamSpecs from a json tree: [{name, lower?, upper?, initial?, fixed?}]."""
    if not isinstance(tree, list):
        raise ModelError("parameter spec must be a list of {name, ...} records")
    specs = []
    for record in tree:
        if not isinstance(record, dict) or "name" not in record:
            raise ModelError("each parameter record needs at least a name")
        base = default_param_specs(doc, names=(record["name"],))[0]
        specs.append(ParamSpec(
            name=base.name,
            lower=float(record.get("lower", base.lower)),
            upper=float(record.get("upper", base.upper)),
            initial=float(record.get("initial", base.initial)),
            fixed=bool(record.get("fixed", False))))
    return specs


def _apply_params(doc, values: dict):
    """Materialize parameter values into (panel, behavior) for simulation."""
    behavior: BehaviorParams = doc.behavior
    replacements = {}
    imp_updates = {}
    for name, value in values.items():
        if name in _BEHAVIOR_PARAMS:
            replacements[_BEHAVIOR_PARAMS[name]] = float(value)
        elif name.startswith(_IMP_PREFIX):
            attr = name[len(_IMP_PREFIX):]
            imp_updates[doc.panel.attributes.index(attr)] = float(value)
        else:
            raise ModelError(f"unknown parameter name {name!r}")
    if replacements:
        behavior = behavior.replace(**replacements)
    panel: AttributePanel = doc.panel
    if imp_updates:
        imp = panel.imp.copy()
        for z, value in imp_updates.items():
            imp[:, :, z] = value
        panel = AttributePanel(times=panel.times, perf=panel.perf, imp=imp,
                               scale=panel.scale, segments=panel.segments,
                               attributes=panel.attributes,
                               interpolation=panel.interpolation)
    return panel, behavior


def share_loss(observed, traj: Trajectory, on: str = "shares") -> float:
    """MSE between observed vectors and the trajectory at the nearest steps.

    observed is a (times, values) pair; values are shares by default, raw
    sizes with on="sizes". Zero iff the observation matches exactly at
    every stamp.
    """
    times, values = observed
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if times.size == 0:
        raise ModelError("empty observation set")
    if values.shape != (times.shape[0], traj.n):
        raise ModelError(
            f"observed values shape {values.shape} does not match "
            f"{times.shape[0]} stamps x {traj.n} segments")
    lo, hi = traj.times[0], traj.times[-1]
    pad = 1e-9 * (1.0 + abs(hi))
    if np.any(times < lo - pad) or np.any(times > hi + pad):
        raise ModelError(
            f"observed stamps must lie within the simulated horizon [{lo:g}, {hi:g}]")
    simulated = traj.shares if on == "shares" else traj.sizes
    idx = np.argmin(np.abs(traj.times[None, :] - times[:, None]), axis=1)
    diff = simulated[idx] - values
    return float(np.mean(diff * diff))


class _BudgetExhausted(Exception):
    pass


def fit(doc, specs, observed, budget: int = 500, seed: int = 0,
        multistart: int = 5, on: str = "shares") -> FitResult:
    """Fit the non-fixed parameters of a scenario to observations.

    budget caps the total number of objective evaluations (simulations)
    across all starts; the first evaluation is always the initial point, so
    the reported loss never exceeds the initial loss. Identical inputs and
    seed give an identical result. Sensitivity probes at the optimum run
    after the search and do not count against the budget.
    """
    if budget < 1:
        raise ModelError("budget must be at least 1 evaluation")
    specs = list(specs)
    fixed_values = {s.name: s.initial for s in specs if s.fixed}
    free = [s for s in specs if not s.fixed]
    if not free:
        raise ModelError("at least one parameter must be free to fit")
    pinned = {s.name: s.lower for s in free if s.lower == s.upper}
    active = [s for s in free if s.lower < s.upper]

    lower = np.array([s.lower for s in active])
    upper = np.array([s.upper for s in active])
    x0 = np.array([s.initial for s in active])

    state = {"evals": 0, "best_loss": np.inf,
             "best_x": x0.copy(), "trace": []}

    def run(values: dict) -> float:
        panel, behavior = _apply_params(doc, values)
        traj = simulate(panel, doc.initial_sizes, behavior,
                        doc.new_customers, doc.integrator)
        return share_loss(observed, traj, on=on)

    def values_at(x: np.ndarray) -> dict:
        values = dict(fixed_values)
        values.update(pinned)
        values.update({s.name: float(v) for s, v in zip(active, x)})
        return values

    def objective(x: np.ndarray) -> float:
        if state["evals"] >= budget:
            raise _BudgetExhausted()
        x = np.minimum(np.maximum(np.asarray(x, dtype=np.float64), lower), upper)
        state["evals"] += 1
        loss = run(values_at(x))
        if loss < state["best_loss"]:
            state["best_loss"] = loss
            state["best_x"] = x.copy()
            state["trace"].append(loss)
        return loss

    rng = np.random.default_rng(seed)
    converged = False
    if not active:
        # every free parameter is pinned by a degenerate box
        objective(np.zeros(0))
        converged = True
    else:
        starts = [x0]
        for _ in range(max(0, multistart - 1)):
            starts.append(rng.uniform(lower, upper))
        try:
            objective(x0)
            for start in starts:
                remaining = budget - state["evals"]
                if remaining <= 0:
                    break
                result = minimize(
                    objective, start, method="Nelder-Mead",
                    bounds=Bounds(lower, upper),
                    options={"maxfev": remaining, "xatol": 1e-8, "fatol": 1e-14})
                converged = converged or bool(result.success)
        except _BudgetExhausted:
            pass

    best_values = values_at(state["best_x"])
    best_fitted = {s.name: best_values[s.name] for s in free}

    sensitivity = {}
    for spec in active:
        x_best = best_values[spec.name]
        delta = 0.05 * abs(x_best)
        if delta < 1e-12:
            delta = 0.05 * (spec.upper - spec.lower)
        probes = []
        for direction in (-1.0, 1.0):
            probe = min(max(x_best + direction * delta, spec.lower), spec.upper)
            probed = dict(best_values)
            probed[spec.name] = probe
            probes.append(run(probed))
        sensitivity[spec.name] = (probes[0], probes[1])

    return FitResult(best=best_fitted, loss=float(state["best_loss"]),
                     trace=tuple(state["trace"]), evaluations=state["evals"],
                     converged=converged, seed=seed, sensitivity=sensitivity)
