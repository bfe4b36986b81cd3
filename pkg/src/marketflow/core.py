"""Shared domain types, numeric conventions, and validation.

All numeric state is 64-bit floating point. Time is a continuous real;
attribute data is sampled at discrete stamps and interpolated between them
(left-hold by default). Every type here is immutable after construction:
arrays are copied in and marked read-only, so values can be shared freely
across threads and runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels


class ModelError(ValueError):
    """Base class for domain failures raised by the model layer."""


class DomainBoundError(ModelError):
    """A value lies outside its documented domain.

    Carries the dotted field path (e.g. ``behavior.wta``) so callers can
    point diagnostics at the offending input.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.detail = message


class DegenerateWeightsError(ModelError):
    """An importance row sums to zero, so attribute weights are undefined."""


class Interpolation(enum.Enum):
    """How stamped series are evaluated between stamps."""

    HOLD = "hold"
    LINEAR = "linear"

    @property
    def code(self) -> int:
        return kernels.INTERP_LINEAR if self is Interpolation.LINEAR else kernels.INTERP_HOLD


class Allocator(enum.Enum):
    RATIO = "ratio"
    SOFTMAX = "softmax"
    REDISTRIBUTION = "redistribution"

    @property
    def code(self) -> int:
        return {
            Allocator.RATIO: kernels.ALLOC_RATIO,
            Allocator.SOFTMAX: kernels.ALLOC_SOFTMAX,
            Allocator.REDISTRIBUTION: kernels.ALLOC_REDISTRIBUTION,
        }[self]


class ModifierOrder(enum.Enum):
    PSYCHOLOGY_THEN_WTA = "psychology_then_wta"
    WTA_THEN_PSYCHOLOGY = "wta_then_psychology"
    WTA_ONLY = "wta_only"
    PSYCHOLOGY_ONLY = "psychology_only"
    NONE = "none"

    @property
    def code(self) -> int:
        return {
            ModifierOrder.PSYCHOLOGY_THEN_WTA: kernels.ORDER_PSY_THEN_WTA,
            ModifierOrder.WTA_THEN_PSYCHOLOGY: kernels.ORDER_WTA_THEN_PSY,
            ModifierOrder.WTA_ONLY: kernels.ORDER_WTA_ONLY,
            ModifierOrder.PSYCHOLOGY_ONLY: kernels.ORDER_PSY_ONLY,
            ModifierOrder.NONE: kernels.ORDER_NONE,
        }[self]


class RefreshMode(enum.Enum):
    MARKET_VECTOR = "market_vector"
    PAIRWISE_MATRIX = "pairwise_matrix"

    @property
    def code(self) -> int:
        if self is RefreshMode.PAIRWISE_MATRIX:
            return kernels.REFRESH_MATRIX
        return kernels.REFRESH_VECTOR


class IntegrationMethod(enum.Enum):
    EULER = "euler"
    RK4 = "rk4"

    @property
    def code(self) -> int:
        return kernels.METHOD_RK4 if self is IntegrationMethod.RK4 else kernels.METHOD_EULER


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScoreScale:
    """The closed numeric scale [s_min, s_max] raw attribute scores live on."""

    s_min: float
    s_max: float

    def __post_init__(self):
        s_min = float(self.s_min)
        s_max = float(self.s_max)
        if not np.isfinite(s_min) or not np.isfinite(s_max):
            raise DomainBoundError("scale", "bounds must be finite")
        if s_min < 0.0:
            raise DomainBoundError("scale.s_min", f"must be >= 0, got {s_min}")
        if not s_min < s_max:
            raise DomainBoundError(
                "scale", f"s_min must be strictly below s_max, got [{s_min}, {s_max}]")
        object.__setattr__(self, "s_min", s_min)
        object.__setattr__(self, "s_max", s_max)

    @property
    def span(self) -> float:
        return self.s_max - self.s_min


@dataclass(frozen=True, eq=False)
class AttributePanel:
    """Stamped performance and importance scores for every segment and attribute.

    ``perf`` and ``imp`` are (T, n, k) cubes: T time stamps, n segments,
    k attributes. Construction checks structure only (shapes, stamp
    ordering); value-domain checks live in :func:`validate_panel` so a bad
    cell is reported, not thrown.
    """

    times: np.ndarray
    perf: np.ndarray
    imp: np.ndarray
    scale: ScoreScale
    segments: tuple = ()
    attributes: tuple = ()
    interpolation: Interpolation = Interpolation.HOLD

    def __post_init__(self):
        times = _frozen_array(self.times)
        perf = _frozen_array(self.perf)
        imp = _frozen_array(self.imp)
        if times.ndim != 1 or times.shape[0] < 1:
            raise ModelError("panel.times must be a non-empty 1-d sequence")
        if perf.ndim != 3:
            raise ModelError(f"panel.perf must be (times, segments, attributes), got shape {perf.shape}")
        if imp.shape != perf.shape:
            raise ModelError(f"panel.imp shape {imp.shape} does not match perf shape {perf.shape}")
        if perf.shape[0] != times.shape[0]:
            raise ModelError(
                f"panel has {times.shape[0]} stamps but {perf.shape[0]} score slices")
        if perf.shape[1] < 1 or perf.shape[2] < 1:
            raise ModelError("panel needs at least one segment and one attribute")
        if np.any(~np.isfinite(times)) or np.any(np.diff(times) <= 0):
            raise ModelError("panel.times must be finite and strictly increasing")
        n, k = perf.shape[1], perf.shape[2]
        segments = tuple(self.segments) or tuple(f"segment_{i + 1}" for i in range(n))
        attributes = tuple(self.attributes) or tuple(f"attribute_{z + 1}" for z in range(k))
        if len(segments) != n:
            raise ModelError(f"{len(segments)} segment names for {n} segments")
        if len(attributes) != k:
            raise ModelError(f"{len(attributes)} attribute names for {k} attributes")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "perf", perf)
        object.__setattr__(self, "imp", imp)
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "attributes", attributes)

    @property
    def n(self) -> int:
        """Segment count."""
        return self.perf.shape[1]

    @property
    def k(self) -> int:
        """Attribute count."""
        return self.perf.shape[2]

    def perf_at(self, t: float) -> np.ndarray:
        """(n, k) performance slice at time t, clamped to the stamp range."""
        return kernels.cube_at(self.times, self.perf, float(t), self.interpolation.code)

    def imp_at(self, t: float) -> np.ndarray:
        """(n, k) importance slice at time t, clamped to the stamp range."""
        return kernels.cube_at(self.times, self.imp, float(t), self.interpolation.code)


@dataclass(frozen=True)
class BehaviorParams:
    """Market-behavior knobs; every field is bound-checked at construction.

    wta is the winner-take-all degree, stickiness the churn resistance,
    decay the obsolescence rate constant, (gamma, c) the psychology
    resistance shape. Anything out of domain raises DomainBoundError before
    a value can reach the kernels.
    """

    wta: float = 0.0
    stickiness: float = 0.0
    decay: float = 1.0
    gamma: float = -1.0
    c: float = 0.0
    allocator: Allocator = Allocator.RATIO
    modifier_order: ModifierOrder = ModifierOrder.PSYCHOLOGY_THEN_WTA
    refresh_mode: RefreshMode = RefreshMode.MARKET_VECTOR
    softmax_temperature: float = 1.0
    diag_bias: float = 0.0
    obsolescence_uses_modified: bool = False

    def __post_init__(self):
        def check(name: str, value: float, lo, hi, lo_ok=True, hi_ok=True) -> float:
            value = float(value)
            if not np.isfinite(value):
                raise DomainBoundError(f"behavior.{name}", "must be finite")
            below = value < lo or (value == lo and not lo_ok)
            above = (hi is not None) and (value > hi or (value == hi and not hi_ok))
            if below or above:
                hi_txt = "inf" if hi is None else hi
                raise DomainBoundError(
                    f"behavior.{name}",
                    f"must lie in {'[' if lo_ok else '('}{lo}, {hi_txt}{']' if hi_ok else ')'}, got {value}")
            return value

        object.__setattr__(self, "wta", check("wta", self.wta, 0.0, 1.0))
        object.__setattr__(self, "stickiness", check("stickiness", self.stickiness, 0.0, 1.0))
        object.__setattr__(self, "decay", check("decay", self.decay, 0.0, 50.0))
        object.__setattr__(self, "gamma", check("gamma", self.gamma, -np.inf, 0.0, hi_ok=False))
        object.__setattr__(self, "c", check("c", self.c, 0.0, None))
        object.__setattr__(self, "softmax_temperature",
                           check("softmax_temperature", self.softmax_temperature, 0.0, None, lo_ok=False))
        object.__setattr__(self, "diag_bias", check("diag_bias", self.diag_bias, 0.0, 1.0))
        if not isinstance(self.allocator, Allocator):
            raise DomainBoundError("behavior.allocator", f"unknown allocator {self.allocator!r}")
        if not isinstance(self.modifier_order, ModifierOrder):
            raise DomainBoundError("behavior.modifier_order", f"unknown order {self.modifier_order!r}")
        if not isinstance(self.refresh_mode, RefreshMode):
            raise DomainBoundError("behavior.refresh_mode", f"unknown mode {self.refresh_mode!r}")
        object.__setattr__(self, "obsolescence_uses_modified", bool(self.obsolescence_uses_modified))

    def replace(self, **changes) -> "BehaviorParams":
        """A copy with the named fields replaced (and re-validated)."""
        current = {
            "wta": self.wta, "stickiness": self.stickiness, "decay": self.decay,
            "gamma": self.gamma, "c": self.c, "allocator": self.allocator,
            "modifier_order": self.modifier_order, "refresh_mode": self.refresh_mode,
            "softmax_temperature": self.softmax_temperature, "diag_bias": self.diag_bias,
            "obsolescence_uses_modified": self.obsolescence_uses_modified,
        }
        current.update(changes)
        return BehaviorParams(**current)


@dataclass(frozen=True, eq=False)
class MarketState:
    """Segment sizes plus cumulative flow accountants at one instant.

    The accountants integrate the de novo, refresh, and obsolescence flows
    from t0, so sizes = initial sizes + cum_bnd + cum_rd - cum_od holds at
    every recorded step within integration tolerance.
    """

    t: float
    sizes: np.ndarray
    cum_bnd: np.ndarray
    cum_rd: np.ndarray
    cum_od: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        for name in ("sizes", "cum_bnd", "cum_rd", "cum_od"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.sizes.shape[0]

    @property
    def shares(self) -> np.ndarray:
        """Sizes normalized to sum 1; an empty market reads as uniform."""
        total = float(self.sizes.sum())
        if total <= 0.0:
            return np.full(self.n, 1.0 / self.n)
        return self.sizes / total


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A full simulated path: per-step states and the rates that advanced them.

    ``times`` has S+1 entries and the rate arrays have S rows; rates[s] is
    the effective rate over [times[s], times[s+1]], so every recorded step
    satisfies the source/sink bookkeeping exactly as integrated.
    """

    times: np.ndarray
    sizes: np.ndarray
    cum_bnd: np.ndarray
    cum_rd: np.ndarray
    cum_od: np.ndarray
    rate_od: np.ndarray
    rate_rd: np.ndarray
    rate_bnd: np.ndarray
    params_used: BehaviorParams
    scenario_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen_array(self.times))
        for name in ("sizes", "cum_bnd", "cum_rd", "cum_od",
                     "rate_od", "rate_rd", "rate_bnd"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        if self.sizes.shape[0] != self.times.shape[0]:
            raise ModelError("trajectory sizes and times disagree on step count")
        if self.rate_od.shape[0] != self.times.shape[0] - 1:
            raise ModelError("trajectory must carry one rate row per step")

    @property
    def n(self) -> int:
        return self.sizes.shape[1]

    @property
    def step_count(self) -> int:
        return self.times.shape[0] - 1

    @property
    def shares(self) -> np.ndarray:
        """(S+1, n) share path; all-zero rows read as uniform."""
        totals = self.sizes.sum(axis=1, keepdims=True)
        out = np.full_like(self.sizes, 1.0 / self.n)
        np.divide(self.sizes, totals, out=out, where=totals > 0)
        return out

    @property
    def states(self) -> list:
        return [
            MarketState(t=self.times[s], sizes=self.sizes[s], cum_bnd=self.cum_bnd[s],
                        cum_rd=self.cum_rd[s], cum_od=self.cum_od[s])
            for s in range(self.times.shape[0])
        ]

    def state_at(self, t: float) -> MarketState:
        """The recorded state at the step nearest to t."""
        idx = int(np.argmin(np.abs(self.times - float(t))))
        return MarketState(t=self.times[idx], sizes=self.sizes[idx],
                           cum_bnd=self.cum_bnd[idx], cum_rd=self.cum_rd[idx],
                           cum_od=self.cum_od[idx])


@dataclass(frozen=True)
class Violation:
    """One validation finding, locating the offending cell or field."""

    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class PanelReport:
    """Outcome of validate_panel: ok, or the list of violations found."""

    ok: bool
    violations: tuple = ()

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def validate_panel(panel: AttributePanel) -> PanelReport:
    """Check every panel value invariant, reporting rather than raising.

    Violations name the offending (stamp, segment, attribute) cell so a
    36-cell table with one bad entry produces one pointed finding.
    """
    violations = []
    lo, hi = panel.scale.s_min, panel.scale.s_max

    def cell(kind: str, ti: int, i: int, z: int) -> str:
        return (f"panel.{kind}[t={panel.times[ti]:g}, "
                f"segment={panel.segments[i]}, attribute={panel.attributes[z]}]")

    for kind in ("perf", "imp"):
        cube = getattr(panel, kind)
        bad = ~np.isfinite(cube) | (cube < lo) | (cube > hi)
        for ti, i, z in zip(*np.nonzero(bad)):
            violations.append(Violation(
                cell(kind, ti, i, z),
                f"value {cube[ti, i, z]:g} outside scale [{lo:g}, {hi:g}]"))

    finite_imp = np.where(np.isfinite(panel.imp), panel.imp, 0.0)
    zero_rows = ~np.any(finite_imp > 0.0, axis=2)
    for ti, i in zip(*np.nonzero(zero_rows)):
        violations.append(Violation(
            f"panel.imp[t={panel.times[ti]:g}, segment={panel.segments[i]}]",
            "zero importance row: no attribute has positive importance, weights are undefined"))

    return PanelReport(ok=not violations, violations=tuple(violations))
