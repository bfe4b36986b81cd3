"""Command-line interface: validate, simulate, fit, export, serve.

Overrides use dotted paths into the scenario tree (repeatable
``--set behavior.wta=1.0``); they are applied after parsing and the result
is re-validated, so an out-of-domain override fails before any simulation
work. Exit codes: 0 success, 1 validation or domain failure, 2 usage error.
Identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .calibration import default_param_specs, fit, parse_param_specs
from .core import ModelError
from .dynamics import competitiveness_series
from .scenario import (ScenarioParseError, apply_overrides, coerce_override_value,
                       load_observed_csv, load_scenario_file, parse_tree,
                       write_trajectory)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marketflow",
        description="Simulate and calibrate competitiveness-driven market-share dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_output=True):
        p.add_argument("scenario", help="path to a .scenario file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="PATH=VALUE",
                       help="override a scenario field by dotted path (repeatable)")
        if with_output:
            p.add_argument("-o", "--output", help="output path (default: stdout)")

    p_validate = sub.add_parser("validate", help="parse and validate a scenario")
    p_validate.add_argument("scenario", help="path to a .scenario file")

    p_sim = sub.add_parser("simulate", help="integrate a scenario and write the trajectory")
    add_common(p_sim)
    p_sim.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="trajectory output format (default csv)")

    p_fit = sub.add_parser("fit", help="fit free parameters to observed shares")
    add_common(p_fit)
    p_fit.add_argument("observed", help="CSV of observed shares: t, share_1..share_n")
    p_fit.add_argument("spec", nargs="?", default=None,
                       help="optional JSON list of parameter records "
                            "{name, lower, upper, initial, fixed}; default: "
                            "wta, s, k, gamma, c free over their domains")
    p_fit.add_argument("--budget", type=int, default=500,
                       help="max objective evaluations (default 500)")
    p_fit.add_argument("--seed", type=int, default=0,
                       help="random seed for multistart draws (default 0)")

    p_export = sub.add_parser("export", help="write plot data (long-form CSVs)")
    add_common(p_export, with_output=False)
    p_export.add_argument("-o", "--output",
                          help="output directory (default: <scenario>_export)")

    p_serve = sub.add_parser("serve", help="start the HTTP scenario service")
    p_serve.add_argument("scenario_dir", help="directory of .scenario files")
    p_serve.add_argument("static_dir", nargs="?", default=None,
                         help="optional directory of UI assets to serve at /")
    p_serve.add_argument("--port", type=int, default=8000, help="listen port")
    return parser


def _load_with_overrides(path: str, override_args):
    doc = load_scenario_file(path)
    if not override_args:
        return doc
    overrides = {}
    for raw in override_args:
        if "=" not in raw:
            raise _Usage(f"--set expects PATH=VALUE, got {raw!r}")
        key, _, value = raw.partition("=")
        overrides[key.strip()] = coerce_override_value(value)
    tree = apply_overrides(doc.tree, overrides)
    return parse_tree(tree, name=doc.name, base_dir=Path(path).parent)


class _Usage(Exception):
    pass


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _long_form_csv(ts, names, columns) -> str:
    lines = ["series,t,value"]
    for j, name in enumerate(names):
        for s in range(len(ts)):
            lines.append(f"{name},{repr(float(ts[s]))},{repr(float(columns[s, j]))}")
    return "\n".join(lines) + "\n"


def _cmd_validate(args) -> int:
    try:
        load_scenario_file(args.scenario)
    except ScenarioParseError as exc:
        for diag in exc.diagnostics:
            print(str(diag), file=sys.stderr)
        return 1
    print("ok")
    return 0


def _cmd_simulate(args) -> int:
    doc = _load_with_overrides(args.scenario, args.overrides)
    traj = doc.simulate()
    data = write_trajectory(traj, args.format).decode("utf-8")
    _emit(data, args.output)
    return 0


def _cmd_fit(args) -> int:
    doc = _load_with_overrides(args.scenario, args.overrides)
    observed = load_observed_csv(args.observed, n=doc.n)
    if args.spec:
        spec_tree = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        specs = parse_param_specs(spec_tree, doc)
    else:
        specs = default_param_specs(doc)
    result = fit(doc, specs, observed, budget=args.budget, seed=args.seed)
    _emit(json.dumps(result.to_tree(), indent=2) + "\n", args.output)
    return 0


def _cmd_export(args) -> int:
    doc = _load_with_overrides(args.scenario, args.overrides)
    traj = doc.simulate()
    series = competitiveness_series(doc.panel, doc.behavior, traj.times)
    out_dir = Path(args.output or f"{Path(args.scenario).stem}_export")
    out_dir.mkdir(parents=True, exist_ok=True)
    names = doc.panel.segments
    files = {
        "competitiveness.csv": _long_form_csv(traj.times, names, series["market"]),
        "allocation.csv": _long_form_csv(traj.times, names, series["h_market"]),
        "shares.csv": _long_form_csv(traj.times, names, traj.shares),
    }
    for filename, text in files.items():
        (out_dir / filename).write_text(text, encoding="utf-8")
    print(f"wrote {', '.join(files)} to {out_dir}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(args.scenario_dir, static_dir=args.static_dir)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "validate": _cmd_validate,
        "simulate": _cmd_simulate,
        "fit": _cmd_fit,
        "export": _cmd_export,
        "serve": _cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except _Usage as exc:
        parser.error(str(exc))  # exits 2 with usage text
    except ScenarioParseError as exc:
        for diag in exc.diagnostics:
            print(str(diag), file=sys.stderr)
        return 1
    except (ModelError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
