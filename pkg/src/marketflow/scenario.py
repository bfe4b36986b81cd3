"""Scenario file format, attribute-series ingestion, and run persistence.

A scenario is a strict JSON tree (canonical text form, format_version 1)
naming the scale, segments, attributes, the stamped score panel (inline or
as a CSV reference), initial sizes, the new-customer series, behavior
parameters, and integrator settings. Parsing is total: any input produces
either a ScenarioDoc or located diagnostics {code, message, path}, never a
crash. Unknown fields are rejected so typos cannot silently become
defaults (a lax flag downgrades them to warnings).

Runs persist under runs/<id>/ where <id> is a content-hash prefix of the
fully resolved scenario tree; directories are staged and atomically
renamed, so concurrent writers never interleave partial files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .core import (Allocator, AttributePanel, BehaviorParams, DomainBoundError,
                   IntegrationMethod, Interpolation, ModelError, ModifierOrder,
                   PanelReport, RefreshMode, ScoreScale, Trajectory,
                   validate_panel)
from .dynamics import IntegratorConfig, NewCustomerSeries, simulate

FORMAT_VERSION = 1
SCENARIO_SUFFIX = ".scenario"

CODE_SYNTAX = "syntax_error"
CODE_SCHEMA = "schema_violation"
CODE_DOMAIN = "domain_error"
CODE_VALIDATION = "validation_failure"
CODE_IO = "io_error"


@dataclass(frozen=True)
class Diagnostic:
    """One located parse/validation finding, machine-readable."""

    code: str
    message: str
    path: str = ""

    def to_tree(self) -> dict:
        return {"code": self.code, "message": self.message, "path": self.path}

    def __str__(self):
        where = f" at {self.path}" if self.path else ""
        return f"[{self.code}]{where}: {self.message}"


class ScenarioParseError(ModelError):
    """Parsing or validating a scenario failed; carries every diagnostic."""

    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        lines = "\n".join(str(d) for d in self.diagnostics)
        super().__init__(f"{len(self.diagnostics)} problem(s):\n{lines}")


@dataclass(frozen=True, eq=False)
class ScenarioDoc:
    """A fully validated scenario, ready to simulate.

    ``tree`` is the resolved canonical form (panel inline, every field
    explicit); writing it out and parsing it back reproduces this doc.
    """

    name: str
    panel: AttributePanel
    initial_sizes: np.ndarray
    new_customers: NewCustomerSeries
    behavior: BehaviorParams
    integrator: IntegratorConfig
    tree: dict

    @property
    def n(self) -> int:
        return self.panel.n

    @property
    def content_id(self) -> str:
        """Content-hash prefix identifying (scenario, params, integrator)."""
        canonical = json.dumps(self.tree, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def simulate(self) -> Trajectory:
        return simulate(self.panel, self.initial_sizes, self.behavior,
                        self.new_customers, self.integrator,
                        scenario_id=self.content_id)


# ---------------------------------------------------------------------------
# scenario parsing
# ---------------------------------------------------------------------------

_BEHAVIOR_KEYS = {
    "wta", "stickiness", "decay", "gamma", "c", "allocator", "modifier_order",
    "refresh_mode", "softmax_temperature", "diag_bias", "obsolescence_uses_modified",
}


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Walk:
    """Schema walk that keeps collecting diagnostics instead of bailing early."""

    def __init__(self, lax: bool):
        self.lax = lax
        self.diags: list = []

    def fail(self, code: str, path: str, message: str):
        self.diags.append(Diagnostic(code=code, message=message, path=path))

    def check_keys(self, node: dict, path: str, required, optional):
        ok = True
        for key in required:
            if key not in node:
                self.fail(CODE_SCHEMA, f"{path}.{key}" if path else key,
                          "required field is missing")
                ok = False
        for key in node:
            if key not in required and key not in optional:
                where = f"{path}.{key}" if path else key
                if self.lax:
                    warnings.warn(f"ignoring unknown scenario field {where}", stacklevel=4)
                else:
                    self.fail(CODE_SCHEMA, where, "unknown field")
                    ok = False
        return ok

    def number(self, node: dict, path: str, key: str, default=None):
        if key not in node:
            return default
        v = node[key]
        if not _is_num(v):
            self.fail(CODE_SCHEMA, f"{path}.{key}" if path else key,
                      f"expected a number, got {type(v).__name__}")
            return default
        return float(v)

    def string(self, node: dict, path: str, key: str, default=None):
        if key not in node:
            return default
        v = node[key]
        if not isinstance(v, str):
            self.fail(CODE_SCHEMA, f"{path}.{key}" if path else key,
                      f"expected a string, got {type(v).__name__}")
            return default
        return v

    def num_list(self, value, path: str):
        if not isinstance(value, list) or not all(_is_num(v) for v in value):
            self.fail(CODE_SCHEMA, path, "expected a list of numbers")
            return None
        return [float(v) for v in value]

    def enum(self, node: dict, path: str, key: str, enum_cls, default):
        raw = self.string(node, path, key)
        if raw is None:
            return default
        try:
            return enum_cls(raw)
        except ValueError:
            options = ", ".join(e.value for e in enum_cls)
            self.fail(CODE_DOMAIN, f"{path}.{key}" if path else key,
                      f"unknown value {raw!r}; expected one of: {options}")
            return default


def _parse_inline_panel(node: dict, walk: _Walk, n: int, k: int):
    times = walk.num_list(node.get("times"), "panel.times")
    cubes = {}
    for key in ("perf", "imp"):
        cube = node.get(key)
        shape_msg = "expected [stamp][segment][attribute] nested lists matching " \
                    f"{n} segments and {k} attributes"
        if (not isinstance(cube, list) or times is None or len(cube) != len(times)
                or not all(isinstance(s, list) and len(s) == n for s in cube)
                or not all(isinstance(row, list) and len(row) == k
                           for s in cube for row in s)
                or not all(_is_num(v) for s in cube for row in s for v in row)):
            walk.fail(CODE_SCHEMA, f"panel.{key}", shape_msg)
            return None
        cubes[key] = cube
    return times, cubes["perf"], cubes["imp"]


def _parse_csv_panel(node: dict, walk: _Walk, base_dir, segments, attributes):
    path = node["csv"]
    if base_dir is None:
        walk.fail(CODE_IO, "panel.csv", "no base directory to resolve the CSV reference against")
        return None
    full = Path(base_dir) / path
    if not full.is_file():
        walk.fail(CODE_IO, "panel.csv", f"referenced file not found: {full}")
        return None
    try:
        loaded = load_attribute_csv(full)
    except ModelError as exc:
        walk.fail(CODE_SCHEMA, "panel.csv", str(exc))
        return None
    if sorted(loaded["segments"]) != sorted(segments):
        walk.fail(CODE_SCHEMA, "panel.csv",
                  f"CSV segments {loaded['segments']} do not match declared {list(segments)}")
        return None
    if sorted(loaded["attributes"]) != sorted(attributes):
        walk.fail(CODE_SCHEMA, "panel.csv",
                  f"CSV attributes {loaded['attributes']} do not match declared {list(attributes)}")
        return None
    seg_perm = [loaded["segments"].index(s) for s in segments]
    attr_perm = [loaded["attributes"].index(a) for a in attributes]
    perf = loaded["perf"][:, seg_perm, :][:, :, attr_perm]
    imp = loaded["imp"][:, seg_perm, :][:, :, attr_perm]
    return loaded["times"].tolist(), perf.tolist(), imp.tolist()


def parse_tree(tree, name: str = "", base_dir=None, lax: bool = False) -> ScenarioDoc:
    """Validate a decoded scenario tree into a ScenarioDoc.

    Collects as many diagnostics as it can before raising, so a doc with
    three problems reports three findings in one pass.
    """
    walk = _Walk(lax)
    if not isinstance(tree, dict):
        raise ScenarioParseError([Diagnostic(CODE_SCHEMA, "scenario root must be an object", "")])

    walk.check_keys(tree, "", required={
        "format_version", "name", "scale", "segments", "attributes",
        "panel", "initial_sizes", "new_customers", "behavior", "integrator",
    }, optional=set())

    version = tree.get("format_version")
    if "format_version" in tree and version != FORMAT_VERSION:
        walk.fail(CODE_SCHEMA, "format_version",
                  f"unsupported version {version!r}; this build reads version {FORMAT_VERSION}")

    doc_name = walk.string(tree, "", "name", default=name) or name

    scale = None
    scale_node = tree.get("scale")
    if isinstance(scale_node, dict):
        walk.check_keys(scale_node, "scale", required={"s_min", "s_max"}, optional=set())
        s_min = walk.number(scale_node, "scale", "s_min")
        s_max = walk.number(scale_node, "scale", "s_max")
        if s_min is not None and s_max is not None:
            try:
                scale = ScoreScale(s_min, s_max)
            except DomainBoundError as exc:
                walk.fail(CODE_DOMAIN, exc.path, exc.detail)
    elif "scale" in tree:
        walk.fail(CODE_SCHEMA, "scale", "expected an object {s_min, s_max}")

    segments = tree.get("segments")
    attributes = tree.get("attributes")
    for label, value in (("segments", segments), ("attributes", attributes)):
        if label in tree and (not isinstance(value, list) or not value
                              or not all(isinstance(v, str) for v in value)
                              or len(set(value)) != len(value)):
            walk.fail(CODE_SCHEMA, label, "expected a non-empty list of unique names")
            if label == "segments":
                segments = None
            else:
                attributes = None

    panel = None
    panel_node = tree.get("panel")
    panel_interp = Interpolation.HOLD
    if isinstance(panel_node, dict) and segments and attributes:
        n, k = len(segments), len(attributes)
        if "csv" in panel_node:
            walk.check_keys(panel_node, "panel", required={"csv"}, optional={"interpolation"})
            parsed = _parse_csv_panel(panel_node, walk, base_dir, segments, attributes)
        else:
            walk.check_keys(panel_node, "panel", required={"times", "perf", "imp"},
                            optional={"interpolation"})
            parsed = _parse_inline_panel(panel_node, walk, n, k)
        panel_interp = walk.enum(panel_node, "panel", "interpolation",
                                 Interpolation, Interpolation.HOLD)
        if parsed is not None and scale is not None:
            times, perf, imp = parsed
            try:
                panel = AttributePanel(times=times, perf=perf, imp=imp, scale=scale,
                                       segments=tuple(segments), attributes=tuple(attributes),
                                       interpolation=panel_interp)
            except ModelError as exc:
                walk.fail(CODE_SCHEMA, "panel", str(exc))
    elif "panel" in tree and not isinstance(panel_node, dict):
        walk.fail(CODE_SCHEMA, "panel", "expected an object")

    initial = None
    if "initial_sizes" in tree:
        initial = walk.num_list(tree.get("initial_sizes"), "initial_sizes")
        if initial is not None and segments and len(initial) != len(segments):
            walk.fail(CODE_SCHEMA, "initial_sizes",
                      f"{len(initial)} sizes for {len(segments)} segments")
            initial = None
        if initial is not None and any(not np.isfinite(v) or v < 0.0 for v in initial):
            walk.fail(CODE_DOMAIN, "initial_sizes", "every segment size must be finite and >= 0")
            initial = None

    new_customers = None
    nc_node = tree.get("new_customers")
    if isinstance(nc_node, dict):
        try:
            if "rate" in nc_node:
                walk.check_keys(nc_node, "new_customers", required={"rate"}, optional=set())
                rate = walk.number(nc_node, "new_customers", "rate")
                if rate is not None:
                    new_customers = NewCustomerSeries.constant(rate)
            else:
                walk.check_keys(nc_node, "new_customers",
                                required={"times", "values"}, optional=set())
                nc_times = walk.num_list(nc_node.get("times"), "new_customers.times")
                nc_values = walk.num_list(nc_node.get("values"), "new_customers.values")
                if nc_times is not None and nc_values is not None:
                    new_customers = NewCustomerSeries.stamped(nc_times, nc_values)
        except DomainBoundError as exc:
            walk.fail(CODE_DOMAIN, exc.path, exc.detail)
        except ModelError as exc:
            walk.fail(CODE_SCHEMA, "new_customers", str(exc))
    elif "new_customers" in tree:
        walk.fail(CODE_SCHEMA, "new_customers", "expected an object")

    behavior = None
    b_node = tree.get("behavior")
    if isinstance(b_node, dict):
        walk.check_keys(b_node, "behavior", required=set(), optional=_BEHAVIOR_KEYS)
        kwargs = {}
        for key in ("wta", "stickiness", "decay", "gamma", "c",
                    "softmax_temperature", "diag_bias"):
            v = walk.number(b_node, "behavior", key)
            if v is not None:
                kwargs[key] = v
        if "obsolescence_uses_modified" in b_node:
            v = b_node["obsolescence_uses_modified"]
            if not isinstance(v, bool):
                walk.fail(CODE_SCHEMA, "behavior.obsolescence_uses_modified",
                          f"expected a boolean, got {type(v).__name__}")
            else:
                kwargs["obsolescence_uses_modified"] = v
        defaults = BehaviorParams()
        kwargs["allocator"] = walk.enum(b_node, "behavior", "allocator",
                                        Allocator, defaults.allocator)
        kwargs["modifier_order"] = walk.enum(b_node, "behavior", "modifier_order",
                                             ModifierOrder, defaults.modifier_order)
        kwargs["refresh_mode"] = walk.enum(b_node, "behavior", "refresh_mode",
                                           RefreshMode, defaults.refresh_mode)
        try:
            behavior = BehaviorParams(**kwargs)
        except DomainBoundError as exc:
            walk.fail(CODE_DOMAIN, exc.path, exc.detail)
    elif "behavior" in tree:
        walk.fail(CODE_SCHEMA, "behavior", "expected an object")

    integrator = None
    i_node = tree.get("integrator")
    if isinstance(i_node, dict):
        walk.check_keys(i_node, "integrator", required={"dt", "horizon"},
                        optional={"method"})
        method = walk.enum(i_node, "integrator", "method",
                           IntegrationMethod, IntegrationMethod.EULER)
        dt = walk.number(i_node, "integrator", "dt")
        horizon = walk.number(i_node, "integrator", "horizon")
        if dt is not None and horizon is not None:
            try:
                integrator = IntegratorConfig(method=method, dt=dt, horizon=horizon)
            except DomainBoundError as exc:
                walk.fail(CODE_DOMAIN, exc.path, exc.detail)
    elif "integrator" in tree:
        walk.fail(CODE_SCHEMA, "integrator", "expected an object")

    if panel is not None:
        report: PanelReport = validate_panel(panel)
        for violation in report.violations:
            walk.fail(CODE_VALIDATION, violation.path, violation.message)

    if walk.diags:
        raise ScenarioParseError(walk.diags)

    doc = ScenarioDoc(
        name=doc_name, panel=panel,
        initial_sizes=np.asarray(initial, dtype=np.float64),
        new_customers=new_customers, behavior=behavior, integrator=integrator,
        tree={},
    )
    object.__setattr__(doc, "tree", scenario_to_tree(doc))
    return doc


def parse_scenario(text, name: str = "", base_dir=None, lax: bool = False) -> ScenarioDoc:
    """Parse scenario text into a validated ScenarioDoc (see parse_tree)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError([Diagnostic(
            CODE_SYNTAX, f"{exc.msg} (line {exc.lineno}, column {exc.colno})", "")])
    return parse_tree(tree, name=name, base_dir=base_dir, lax=lax)


def load_scenario_file(path, lax: bool = False) -> ScenarioDoc:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError([Diagnostic(CODE_IO, str(exc), str(path))])
    return parse_scenario(text, name=path.stem, base_dir=path.parent, lax=lax)


def scenario_to_tree(doc: ScenarioDoc) -> dict:
    """The resolved canonical tree: panel inline, every field explicit."""
    panel = doc.panel
    nc = doc.new_customers
    if nc.mode is type(nc.mode).CONSTANT:
        nc_tree = {"rate": nc.const}
    else:
        nc_tree = {"times": nc.times.tolist(), "values": nc.values.tolist()}
    b = doc.behavior
    return {
        "format_version": FORMAT_VERSION,
        "name": doc.name,
        "scale": {"s_min": panel.scale.s_min, "s_max": panel.scale.s_max},
        "segments": list(panel.segments),
        "attributes": list(panel.attributes),
        "panel": {
            "interpolation": panel.interpolation.value,
            "times": panel.times.tolist(),
            "perf": panel.perf.tolist(),
            "imp": panel.imp.tolist(),
        },
        "initial_sizes": doc.initial_sizes.tolist(),
        "new_customers": nc_tree,
        "behavior": {
            "wta": b.wta, "stickiness": b.stickiness, "decay": b.decay,
            "gamma": b.gamma, "c": b.c, "allocator": b.allocator.value,
            "modifier_order": b.modifier_order.value,
            "refresh_mode": b.refresh_mode.value,
            "softmax_temperature": b.softmax_temperature,
            "diag_bias": b.diag_bias,
            "obsolescence_uses_modified": b.obsolescence_uses_modified,
        },
        "integrator": {
            "method": doc.integrator.method.value,
            "dt": doc.integrator.dt,
            "horizon": doc.integrator.horizon,
        },
    }


def write_scenario(doc: ScenarioDoc) -> str:
    return json.dumps(doc.tree, indent=2) + "\n"


# ---------------------------------------------------------------------------
# dotted-path overrides
# ---------------------------------------------------------------------------

def coerce_override_value(raw: str):
    """Interpret a CLI override value: JSON literal if it parses, else string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(tree: dict, overrides: dict) -> dict:
    """Apply {dotted.path: value} overrides to a copy of a scenario tree.

    Paths must land on existing schema locations (list indices allowed);
    anything else is rejected so a typo cannot silently create a new field.
    The caller re-parses the result, which re-runs full validation.
    """
    out = json.loads(json.dumps(tree))
    diags = []
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = out
        ok = True
        for depth, part in enumerate(parts):
            last = depth == len(parts) - 1
            if isinstance(node, list):
                try:
                    idx = int(part)
                    node[idx]
                except (ValueError, IndexError):
                    diags.append(Diagnostic(CODE_SCHEMA, "not a valid list index", dotted))
                    ok = False
                    break
                if last:
                    node[idx] = value
                else:
                    node = node[idx]
            elif isinstance(node, dict):
                if part not in node:
                    diags.append(Diagnostic(CODE_SCHEMA, "unknown override path", dotted))
                    ok = False
                    break
                if last:
                    node[part] = value
                else:
                    node = node[part]
            else:
                diags.append(Diagnostic(CODE_SCHEMA, "path descends into a scalar", dotted))
                ok = False
                break
        if not ok:
            continue
    if diags:
        raise ScenarioParseError(diags)
    return out


# ---------------------------------------------------------------------------
# attribute CSV ingestion
# ---------------------------------------------------------------------------

_CSV_HEADER = ["t", "segment", "attribute", "perf", "imp"]


def load_attribute_csv(source) -> dict:
    """Read a long-form attribute CSV into a dense stamped panel.

    Header must be exactly ``t, segment, attribute, perf, imp``. Every
    (stamp, segment, attribute) cell must appear exactly once; segment and
    attribute order follows first appearance. Returns a dict with keys
    times, perf, imp (arrays) and segments, attributes (name lists).
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(f.strip() for f in r)]
    if not rows:
        raise ModelError("attribute CSV is empty")
    header = [f.strip() for f in rows[0]]
    if header != _CSV_HEADER:
        raise ModelError(
            f"attribute CSV header must be {', '.join(_CSV_HEADER)}; got {', '.join(header)}")

    cells = {}
    segments: list = []
    attributes: list = []
    times_seen: set = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 5:
            raise ModelError(f"row {lineno}: expected 5 fields, got {len(row)}")
        t_raw, seg, attr, perf_raw, imp_raw = (f.strip() for f in row)
        try:
            t = float(t_raw)
            perf = float(perf_raw)
            imp = float(imp_raw)
        except ValueError:
            raise ModelError(f"row {lineno}: non-numeric value")
        key = (t, seg, attr)
        if key in cells:
            raise ModelError(f"row {lineno}: duplicate cell (t={t:g}, {seg}, {attr})")
        cells[key] = (perf, imp)
        times_seen.add(t)
        if seg not in segments:
            segments.append(seg)
        if attr not in attributes:
            attributes.append(attr)

    times = sorted(times_seen)
    missing = [
        f"(t={t:g}, {seg}, {attr})"
        for t in times for seg in segments for attr in attributes
        if (t, seg, attr) not in cells
    ]
    if missing:
        shown = ", ".join(missing[:8])
        more = f" and {len(missing) - 8} more" if len(missing) > 8 else ""
        raise ModelError(f"attribute CSV is not dense; missing cells: {shown}{more}")

    perf = np.empty((len(times), len(segments), len(attributes)))
    imp = np.empty_like(perf)
    for ti, t in enumerate(times):
        for i, seg in enumerate(segments):
            for z, attr in enumerate(attributes):
                perf[ti, i, z], imp[ti, i, z] = cells[(t, seg, attr)]
    return {"times": np.asarray(times), "perf": perf, "imp": imp,
            "segments": segments, "attributes": attributes}


# ---------------------------------------------------------------------------
# trajectory serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    """Shortest decimal form that round-trips the exact float64 value."""
    return repr(float(x))


def trajectory_to_csv(traj: Trajectory) -> str:
    """Wide CSV: one row per recorded step.

    Rate columns sit on the row they advance, i.e. the rate over
    [t_s, t_{s+1}] is written on the t_s row; the final row's rate cells
    are empty. Shares are the written sizes normalized per row.
    """
    n = traj.n
    header = (["t"]
              + [f"D_{i + 1}" for i in range(n)]
              + [f"dOD_{i + 1}" for i in range(n)]
              + [f"dRD_{i + 1}" for i in range(n)]
              + [f"dBND_{i + 1}" for i in range(n)]
              + [f"share_{i + 1}" for i in range(n)])
    shares = traj.shares
    lines = [",".join(header)]
    last = traj.times.shape[0] - 1
    for s in range(last + 1):
        row = [_fmt(traj.times[s])]
        row += [_fmt(v) for v in traj.sizes[s]]
        if s < last:
            row += [_fmt(v) for v in traj.rate_od[s]]
            row += [_fmt(v) for v in traj.rate_rd[s]]
            row += [_fmt(v) for v in traj.rate_bnd[s]]
        else:
            row += [""] * (3 * n)
        row += [_fmt(v) for v in shares[s]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def behavior_to_tree(params: BehaviorParams) -> dict:
    return {
        "wta": params.wta, "stickiness": params.stickiness, "decay": params.decay,
        "gamma": params.gamma, "c": params.c, "allocator": params.allocator.value,
        "modifier_order": params.modifier_order.value,
        "refresh_mode": params.refresh_mode.value,
        "softmax_temperature": params.softmax_temperature,
        "diag_bias": params.diag_bias,
        "obsolescence_uses_modified": params.obsolescence_uses_modified,
    }


def behavior_from_tree(tree: dict) -> BehaviorParams:
    kwargs = dict(tree)
    kwargs["allocator"] = Allocator(kwargs["allocator"])
    kwargs["modifier_order"] = ModifierOrder(kwargs["modifier_order"])
    kwargs["refresh_mode"] = RefreshMode(kwargs["refresh_mode"])
    return BehaviorParams(**kwargs)


def trajectory_to_tree(traj: Trajectory) -> dict:
    return {
        "times": traj.times.tolist(),
        "sizes": traj.sizes.tolist(),
        "shares": traj.shares.tolist(),
        "cum_bnd": traj.cum_bnd.tolist(),
        "cum_rd": traj.cum_rd.tolist(),
        "cum_od": traj.cum_od.tolist(),
        "rate_od": traj.rate_od.tolist(),
        "rate_rd": traj.rate_rd.tolist(),
        "rate_bnd": traj.rate_bnd.tolist(),
        "params_used": behavior_to_tree(traj.params_used),
        "scenario_id": traj.scenario_id,
    }


def trajectory_from_tree(tree: dict) -> Trajectory:
    return Trajectory(
        times=tree["times"], sizes=tree["sizes"], cum_bnd=tree["cum_bnd"],
        cum_rd=tree["cum_rd"], cum_od=tree["cum_od"], rate_od=tree["rate_od"],
        rate_rd=tree["rate_rd"], rate_bnd=tree["rate_bnd"],
        params_used=behavior_from_tree(tree["params_used"]),
        scenario_id=tree.get("scenario_id", ""))


def write_trajectory(traj: Trajectory, format: str = "csv") -> bytes:
    """Serialize a trajectory; format is "csv" or "json" (the tree form)."""
    if format == "csv":
        return trajectory_to_csv(traj).encode("utf-8")
    if format == "json":
        return (json.dumps(trajectory_to_tree(traj), indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown trajectory format {format!r}; use csv or json")


def read_trajectory_json(data) -> Trajectory:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return trajectory_from_tree(json.loads(data))


# ---------------------------------------------------------------------------
# observed shares
# ---------------------------------------------------------------------------

def load_observed_csv(source, n: int = None):
    """Read observed market shares: header ``t, share_1..share_n``.

    Each row's shares must sum to 1 within 1e-6. Returns (times, shares)
    arrays sorted by time.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(f.strip() for f in r)]
    if not rows:
        raise ModelError("observed-shares CSV is empty")
    header = [f.strip() for f in rows[0]]
    if header[0] != "t" or len(header) < 2 or \
            header[1:] != [f"share_{i + 1}" for i in range(len(header) - 1)]:
        raise ModelError("observed-shares CSV header must be t, share_1..share_n")
    width = len(header) - 1
    if n is not None and width != n:
        raise ModelError(f"observed shares have {width} segments, scenario has {n}")
    times = []
    shares = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width + 1:
            raise ModelError(f"row {lineno}: expected {width + 1} fields, got {len(row)}")
        try:
            values = [float(f) for f in row]
        except ValueError:
            raise ModelError(f"row {lineno}: non-numeric value")
        total = sum(values[1:])
        if abs(total - 1.0) > 1e-6:
            raise ModelError(f"row {lineno}: shares sum to {total:.8f}, expected 1")
        times.append(values[0])
        shares.append(values[1:])
    order = np.argsort(times)
    return np.asarray(times)[order], np.asarray(shares)[order]


def write_observed_csv(times, shares) -> str:
    shares = np.asarray(shares)
    header = ["t"] + [f"share_{i + 1}" for i in range(shares.shape[1])]
    lines = [",".join(header)]
    for t, row in zip(times, shares):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# run persistence
# ---------------------------------------------------------------------------

def persist_run(runs_dir, doc: ScenarioDoc, traj: Trajectory, extra: dict = None) -> str:
    """Write runs/<id>/ (scenario, trajectory, manifest) atomically.

    The id is the scenario's content hash, so identical configurations map
    to the same directory; a directory that already exists is left alone
    (its content is the same by construction).
    """
    runs_dir = Path(runs_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)
    run_id = doc.content_id
    target = runs_dir / run_id
    if target.exists():
        return run_id

    manifest = {
        "id": run_id,
        "scenario_name": doc.name,
        "step_count": traj.step_count,
        "final_shares": traj.shares[-1].tolist(),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)

    staging = tempfile.mkdtemp(prefix=f".tmp-{run_id}-", dir=runs_dir)
    try:
        Path(staging, "scenario.json").write_text(write_scenario(doc), encoding="utf-8")
        Path(staging, "trajectory.json").write_bytes(write_trajectory(traj, "json"))
        Path(staging, "manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        try:
            os.rename(staging, target)
        except OSError:
            if not target.exists():
                raise
    finally:
        if Path(staging).exists():
            for child in Path(staging).iterdir():
                child.unlink()
            Path(staging).rmdir()
    return run_id


def load_run(runs_dir, run_id: str):
    """Load a persisted run; returns (manifest, scenario doc, trajectory)."""
    base = Path(runs_dir) / run_id
    if not base.is_dir():
        raise FileNotFoundError(f"no persisted run {run_id!r} under {runs_dir}")
    manifest = json.loads(Path(base, "manifest.json").read_text(encoding="utf-8"))
    doc = parse_scenario(Path(base, "scenario.json").read_text(encoding="utf-8"),
                         name=manifest.get("scenario_name", run_id))
    traj = read_trajectory_json(Path(base, "trajectory.json").read_bytes())
    return manifest, doc, traj


def list_scenarios(directory) -> dict:
    """Map scenario name -> path for every *.scenario file in a directory."""
    directory = Path(directory)
    found = {}
    if directory.is_dir():
        for path in sorted(directory.glob(f"*{SCENARIO_SUFFIX}")):
            found[path.stem] = path
    return found
