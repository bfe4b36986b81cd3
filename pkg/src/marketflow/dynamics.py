"""Right-hand side assembly and fixed-step integration of the market ODE.

Each segment's size changes by three flows: obsolescence drains products
whose competitiveness and stickiness are low, refresh reallocates exactly
that drained volume across segments, and de novo demand injects newly
arriving customers. Refresh plus de novo minus obsolescence is the net
rate; cumulative accountants for all three flows are integrated alongside
the sizes so the decomposition is checkable at every recorded step.

Integration is fixed-step (explicit Euler by default, classical RK4
optionally) and fully deterministic: identical inputs produce bit-identical
trajectories. A nonnegativity limiter scales a violating segment's outflow
so it lands exactly at zero and rebuilds the refresh pool from the scaled
outflows, which preserves the flow bookkeeping.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .allocation import allocation_matrix, market_allocation
from .behavior import ModifiedScores
from .core import (AttributePanel, BehaviorParams, DomainBoundError,
                   IntegrationMethod, Interpolation, ModelError, RefreshMode,
                   Trajectory, _frozen_array, validate_panel)


class _NcMode(enum.Enum):
    CONSTANT = kernels.NC_CONSTANT
    SERIES = kernels.NC_SERIES


@dataclass(frozen=True, eq=False)
class NewCustomerSeries:
    """Rate at which new customers enter the market, as a function of time.

    Either a constant rate or a stamped series evaluated with the panel's
    interpolation rule; the rate is nonnegative everywhere.
    """

    mode: _NcMode
    const: float = 0.0
    times: np.ndarray = None
    values: np.ndarray = None

    def __post_init__(self):
        if self.mode is _NcMode.CONSTANT:
            const = float(self.const)
            if not (np.isfinite(const) and const >= 0.0):
                raise DomainBoundError("new_customers.rate", f"must be >= 0, got {const}")
            object.__setattr__(self, "const", const)
            object.__setattr__(self, "times", _frozen_array([0.0]))
            object.__setattr__(self, "values", _frozen_array([0.0]))
        else:
            times = _frozen_array(self.times)
            values = _frozen_array(self.values)
            if times.ndim != 1 or times.shape[0] < 1 or values.shape != times.shape:
                raise ModelError("new_customers series needs matching times and values")
            if np.any(~np.isfinite(times)) or np.any(np.diff(times) <= 0):
                raise ModelError("new_customers.times must be finite and strictly increasing")
            if np.any(~np.isfinite(values)) or np.any(values < 0.0):
                raise DomainBoundError("new_customers.values", "every rate must be >= 0")
            object.__setattr__(self, "times", times)
            object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, rate: float) -> "NewCustomerSeries":
        return cls(mode=_NcMode.CONSTANT, const=rate)

    @classmethod
    def stamped(cls, times, values) -> "NewCustomerSeries":
        return cls(mode=_NcMode.SERIES, times=times, values=values)

    def rate_at(self, t: float, interpolation: Interpolation = Interpolation.HOLD) -> float:
        if self.mode is _NcMode.CONSTANT:
            return self.const
        return float(kernels.series_at(self.times, self.values, float(t),
                                       interpolation.code))


@dataclass(frozen=True, eq=False)
class FlowRates:
    """Instantaneous flow rates per segment; all three components >= 0."""

    d_od: np.ndarray
    d_rd: np.ndarray
    d_bnd: np.ndarray

    def __post_init__(self):
        for name in ("d_od", "d_rd", "d_bnd"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))

    @property
    def d_d(self) -> np.ndarray:
        """Net rate of change of segment sizes: sources minus sinks."""
        return self.d_bnd + self.d_rd - self.d_od


@dataclass(frozen=True, eq=False)
class IntegratorConfig:
    """Fixed-step integrator settings.

    horizon is the simulated duration measured from the first panel stamp;
    the final step is shortened if the horizon is not a multiple of dt.
    """

    method: IntegrationMethod = IntegrationMethod.EULER
    dt: float = 0.05
    horizon: float = 1.0

    def __post_init__(self):
        dt = float(self.dt)
        horizon = float(self.horizon)
        if not (np.isfinite(dt) and dt > 0.0):
            raise DomainBoundError("integrator.dt", f"step size must be > 0, got {dt}")
        if not (np.isfinite(horizon) and horizon > 0.0):
            raise DomainBoundError(
                "integrator.horizon",
                f"must extend past the first stamp (> 0), got {horizon}")
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "horizon", horizon)

    @property
    def step_count(self) -> int:
        ratio = self.horizon / self.dt
        if not np.isfinite(ratio) or ratio > 1e15:
            return 10 ** 18  # saturate: callers only compare against caps
        nfull = int(np.floor(ratio + 1e-9))
        rem = self.horizon - nfull * self.dt
        return nfull + (1 if rem > 1e-12 * (1.0 + self.horizon) else 0)


def obsolescence_rate(sizes, market_norm, decay: float, stickiness: float) -> np.ndarray:
    """Outflow magnitude decay * (1 - a) * (1 - s) * D per segment.

    market_norm is the market score mapped onto [0, 1]; a maximally
    competitive segment (a=1) or fully sticky customers (s=1) never churn.
    """
    decay = float(decay)
    stickiness = float(stickiness)
    if not 0.0 <= decay <= 50.0:
        raise DomainBoundError("behavior.decay", f"must lie in [0, 50], got {decay}")
    if not 0.0 <= stickiness <= 1.0:
        raise DomainBoundError("behavior.stickiness", f"must lie in [0, 1], got {stickiness}")
    return kernels.obsolescence_rates(
        np.ascontiguousarray(sizes, dtype=np.float64),
        np.ascontiguousarray(market_norm, dtype=np.float64),
        decay, stickiness)


def refresh_rates(d_od, scores: ModifiedScores, params: BehaviorParams) -> np.ndarray:
    """Reallocate the obsolescence outflow across segments.

    Market-vector mode pools the outflow and splits it by the market-level
    allocation; pairwise-matrix mode routes each segment's outflow through
    its own column of the allocation matrix. Either way the total refreshed
    volume equals the total outflow.
    """
    d_od = np.ascontiguousarray(d_od, dtype=np.float64)
    if params.refresh_mode is RefreshMode.PAIRWISE_MATRIX:
        H = allocation_matrix(scores.pairwise_mod, params.allocator, params.wta,
                              scores.i_max, params.softmax_temperature,
                              params.diag_bias)
        return H.H @ d_od
    h = market_allocation(scores.market_mod, params.allocator, params.wta,
                          scores.i_max, params.softmax_temperature)
    return h.h * float(d_od.sum())


def new_entrant_rates(nc_rate: float, scores: ModifiedScores,
                      params: BehaviorParams) -> np.ndarray:
    """Split the incoming-customer rate by the market-level allocation."""
    nc_rate = float(nc_rate)
    if not nc_rate >= 0.0:
        raise DomainBoundError("new_customers.rate", f"must be >= 0, got {nc_rate}")
    h = market_allocation(scores.market_mod, params.allocator, params.wta,
                          scores.i_max, params.softmax_temperature)
    return h.h * nc_rate


def _kernel_args(panel: AttributePanel, params: BehaviorParams,
                 new_customers: NewCustomerSeries):
    return (panel.times, panel.perf, panel.imp,
            panel.scale.s_min, panel.scale.s_max, panel.interpolation.code,
            params.wta, params.stickiness, params.decay, params.gamma, params.c,
            params.allocator.code, params.modifier_order.code,
            params.refresh_mode.code, params.softmax_temperature, params.diag_bias,
            1 if params.obsolescence_uses_modified else 0,
            new_customers.mode.value, new_customers.const,
            new_customers.times, new_customers.values)


def rhs(panel: AttributePanel, params: BehaviorParams,
        new_customers: NewCustomerSeries, sizes, t: float) -> FlowRates:
    """One full right-hand-side evaluation at (sizes, t).

    Scores the panel at t, applies the behavioral modifiers, allocates, and
    returns the three flow-rate vectors.
    """
    sizes = np.ascontiguousarray(sizes, dtype=np.float64)
    if sizes.shape != (panel.n,):
        raise ModelError(f"sizes shape {sizes.shape} does not match {panel.n} segments")
    d_od, d_rd, d_bnd, _, _ = kernels.flow_terms(
        sizes, float(t), *_kernel_args(panel, params, new_customers))
    return FlowRates(d_od=d_od, d_rd=d_rd, d_bnd=d_bnd)


def simulate(panel: AttributePanel, initial_sizes, params: BehaviorParams,
             new_customers: NewCustomerSeries, config: IntegratorConfig,
             scenario_id: str = "") -> Trajectory:
    """Integrate the market from the first panel stamp over the horizon.

    The panel is validated up front so kernel code never sees an
    out-of-domain score. Sizes are kept nonnegative by the outflow limiter;
    two calls with identical inputs return bit-identical trajectories.
    """
    report = validate_panel(panel)
    if not report.ok:
        raise ModelError("invalid panel: " + "; ".join(str(v) for v in report.violations[:5]))
    d0 = np.ascontiguousarray(initial_sizes, dtype=np.float64)
    if d0.shape != (panel.n,):
        raise ModelError(
            f"initial_sizes has shape {d0.shape} but the panel has {panel.n} segments")
    if np.any(~np.isfinite(d0)) or np.any(d0 < 0.0):
        raise DomainBoundError("initial_sizes", "every segment size must be finite and >= 0")
    if config.method is IntegrationMethod.EULER and params.decay * config.dt >= 1.0:
        warnings.warn(
            f"decay*dt = {params.decay * config.dt:g} >= 1; explicit Euler may be "
            "unstable at this step size", stacklevel=2)

    t0 = float(panel.times[0])
    ts, sizes, cum_bnd, cum_rd, cum_od, rate_od, rate_rd, rate_bnd = kernels.integrate(
        d0, t0, t0 + config.horizon, config.dt, config.method.code,
        *_kernel_args(panel, params, new_customers))
    return Trajectory(times=ts, sizes=sizes, cum_bnd=cum_bnd, cum_rd=cum_rd,
                      cum_od=cum_od, rate_od=rate_od, rate_rd=rate_rd,
                      rate_bnd=rate_bnd, params_used=params, scenario_id=scenario_id)


def competitiveness_series(panel: AttributePanel, params: BehaviorParams,
                           ts) -> dict:
    """Exogenous score series sampled at the given times.

    Returns arrays keyed "t", "market", "market_mod", "h_market", "i_max";
    scores depend only on the panel and params, not on segment sizes, so
    the series pairs with any trajectory over the same times.
    """
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    m = ts.shape[0]
    market = np.empty((m, panel.n))
    market_mod = np.empty((m, panel.n))
    h_market = np.empty((m, panel.n))
    i_max = np.empty(m, dtype=np.int64)
    s_min, s_max = panel.scale.s_min, panel.scale.s_max
    for s in range(m):
        t = float(ts[s])
        perf_t = panel.perf_at(t)
        imp_t = panel.imp_at(t)
        w = kernels.importance_weights(imp_t)
        market[s] = kernels.market_scores(perf_t, w, s_min, s_max)
        pairwise = kernels.pairwise_scores(perf_t, w, s_min, s_max)
        m_mod, _, win = kernels.modify_scores(
            market[s], pairwise, params.modifier_order.code,
            params.wta, params.gamma, params.c)
        market_mod[s] = m_mod
        h, _ = kernels.market_allocation(m_mod, params.allocator.code, params.wta,
                                         win, params.softmax_temperature)
        h_market[s] = h
        i_max[s] = win
    return {"t": ts, "market": market, "market_mod": market_mod,
            "h_market": h_market, "i_max": i_max}
