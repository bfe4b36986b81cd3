"""HTTP service exposing scenario simulation and calibration.

Serves the scenario files of one directory, simulates with per-request
overrides, fits parameters, and replays persisted runs. Requests are
handled synchronously (runs are milliseconds at this scale) and every
response is a JSON tree. Errors come back as {code, message, path} with
any further findings under "diagnostics": 400 for schema or domain
problems, 404 for unknown names, 422 for panel validation failures.

Simulation work per request is bounded: a configuration that would take
more than a million integrator steps is rejected up front. When a static
directory is given (the built what-if UI), it is served at the root.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .calibration import default_param_specs, fit, parse_param_specs
from .core import ModelError
from .dynamics import competitiveness_series
from .scenario import (CODE_DOMAIN, CODE_SCHEMA, CODE_VALIDATION, Diagnostic,
                       ScenarioParseError, apply_overrides, list_scenarios,
                       load_observed_csv, load_run, load_scenario_file,
                       parse_tree, persist_run, trajectory_to_tree)

MAX_STEPS = 1_000_000


def _error(status: int, code: str, message: str, path: str = "",
           diagnostics=()) -> JSONResponse:
    body = {"code": code, "message": message, "path": path}
    if diagnostics:
        body["diagnostics"] = [d.to_tree() for d in diagnostics]
    return JSONResponse(status_code=status, content=body)


def _parse_error_response(exc: ScenarioParseError) -> JSONResponse:
    diags = exc.diagnostics
    only_validation = all(d.code == CODE_VALIDATION for d in diags)
    status = 422 if only_validation else 400
    first = diags[0]
    return _error(status, first.code, first.message, first.path, diags)


def _series_tree(doc, times) -> dict:
    series = competitiveness_series(doc.panel, doc.behavior, times)
    names = doc.panel.segments
    per_segment = lambda grid: {name: grid[:, i].tolist()
                                for i, name in enumerate(names)}
    return {
        "t": series["t"].tolist(),
        "market": per_segment(series["market"]),
        "market_mod": per_segment(series["market_mod"]),
        "h_market": per_segment(series["h_market"]),
        "i_max": series["i_max"].tolist(),
    }


def create_app(scenario_dir, static_dir=None, runs_dir=None) -> FastAPI:
    """Build the service for one directory of .scenario files."""
    scenario_dir = Path(scenario_dir)
    runs_dir = Path(runs_dir) if runs_dir else scenario_dir / "runs"
    app = FastAPI(title="marketflow scenario service")

    @app.exception_handler(RequestValidationError)
    def _on_bad_request(request: Request, exc: RequestValidationError):
        return _error(400, CODE_SCHEMA, "request body is not valid JSON of the expected shape")

    def resolve_doc(payload: dict):
        """Payload {scenario: name} or {doc: tree}, plus optional overrides."""
        if not isinstance(payload, dict):
            raise ScenarioParseError([Diagnostic(CODE_SCHEMA, "body must be an object", "")])
        overrides = payload.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ScenarioParseError(
                [Diagnostic(CODE_SCHEMA, "overrides must be an object of path: value", "overrides")])
        if "doc" in payload:
            if not isinstance(payload["doc"], dict):
                raise ScenarioParseError(
                    [Diagnostic(CODE_SCHEMA, "doc must be a scenario object", "doc")])
            tree = payload["doc"]
            name = tree.get("name", "inline") if isinstance(tree.get("name"), str) else "inline"
        elif "scenario" in payload:
            name = payload["scenario"]
            if not isinstance(name, str):
                raise ScenarioParseError(
                    [Diagnostic(CODE_SCHEMA, "scenario must be a name string", "scenario")])
            available = list_scenarios(scenario_dir)
            if name not in available:
                return None, name  # 404 signal
            tree = load_scenario_file(available[name]).tree
        else:
            raise ScenarioParseError([Diagnostic(
                CODE_SCHEMA, "body needs either a scenario name or an inline doc", "")])
        if overrides:
            tree = apply_overrides(tree, overrides)
        return parse_tree(tree, name=name, base_dir=scenario_dir), name

    @app.get("/api/scenarios")
    def get_scenarios():
        items = []
        for name, path in list_scenarios(scenario_dir).items():
            try:
                doc = load_scenario_file(path)
            except ScenarioParseError:
                continue  # a broken file must not take down the listing
            items.append({
                "name": name,
                "segments": list(doc.panel.segments),
                "attributes": list(doc.panel.attributes),
                "horizon": doc.integrator.horizon,
                "dt": doc.integrator.dt,
                "method": doc.integrator.method.value,
            })
        return {"scenarios": items}

    @app.get("/api/scenarios/{name}")
    def get_scenario(name: str):
        available = list_scenarios(scenario_dir)
        if name not in available:
            return _error(404, "not_found", f"unknown scenario {name!r}", "scenario")
        try:
            doc = load_scenario_file(available[name])
        except ScenarioParseError as exc:
            return _parse_error_response(exc)
        return {"name": name, "scenario": doc.tree}

    @app.post("/api/simulate")
    def post_simulate(payload: dict):
        try:
            doc, name = resolve_doc(payload)
            if doc is None:
                return _error(404, "not_found", f"unknown scenario {name!r}", "scenario")
            if doc.integrator.step_count > MAX_STEPS:
                return _error(400, CODE_DOMAIN,
                              f"configuration needs {doc.integrator.step_count} steps; "
                              f"the cap is {MAX_STEPS}", "integrator")
            traj = doc.simulate()
        except ScenarioParseError as exc:
            return _parse_error_response(exc)
        except ModelError as exc:
            return _error(400, CODE_DOMAIN, str(exc), getattr(exc, "path", ""))
        run_id = persist_run(runs_dir, doc, traj)
        return {
            "run_id": run_id,
            "scenario": name,
            "segments": list(doc.panel.segments),
            "trajectory": trajectory_to_tree(traj),
            "series": _series_tree(doc, traj.times),
        }

    @app.post("/api/fit")
    def post_fit(payload: dict):
        try:
            doc, name = resolve_doc(payload)
            if doc is None:
                return _error(404, "not_found", f"unknown scenario {name!r}", "scenario")
            if doc.integrator.step_count > MAX_STEPS:
                return _error(400, CODE_DOMAIN,
                              f"configuration needs {doc.integrator.step_count} steps; "
                              f"the cap is {MAX_STEPS}", "integrator")
            observed_csv = payload.get("observed_csv")
            if not isinstance(observed_csv, str) or not observed_csv.strip():
                return _error(400, CODE_SCHEMA,
                              "observed_csv must be inline CSV text (t, share_1..share_n)",
                              "observed_csv")
            observed = load_observed_csv(io.StringIO(observed_csv), n=doc.n)
            if "spec" in payload and payload["spec"] is not None:
                specs = parse_param_specs(payload["spec"], doc)
            else:
                specs = default_param_specs(doc)
            budget = payload.get("budget", 500)
            seed = payload.get("seed", 0)
            if not isinstance(budget, int) or isinstance(budget, bool) or budget < 1:
                return _error(400, CODE_SCHEMA, "budget must be a positive integer", "budget")
            if not isinstance(seed, int) or isinstance(seed, bool):
                return _error(400, CODE_SCHEMA, "seed must be an integer", "seed")
            result = fit(doc, specs, observed, budget=budget, seed=seed)
        except ScenarioParseError as exc:
            return _parse_error_response(exc)
        except ModelError as exc:
            return _error(400, CODE_DOMAIN, str(exc), getattr(exc, "path", ""))
        return {"scenario": name, "fit": result.to_tree()}

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        try:
            manifest, doc, traj = load_run(runs_dir, run_id)
        except FileNotFoundError:
            return _error(404, "not_found", f"unknown run {run_id!r}", "run_id")
        except (ScenarioParseError, ModelError, json.JSONDecodeError, KeyError):
            return _error(400, CODE_DOMAIN, f"run {run_id!r} is unreadable", "run_id")
        return {
            "run_id": run_id,
            "manifest": manifest,
            "scenario": doc.tree,
            "segments": list(doc.panel.segments),
            "trajectory": trajectory_to_tree(traj),
            "series": _series_tree(doc, traj.times),
        }

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
