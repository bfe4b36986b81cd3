"""Array kernels for scoring, behavioral modification, allocation and integration.

Every function here is written against the numba nopython subset and wrapped
by ``maybe_njit``, so the identical source runs JIT-compiled or as plain
numpy/Python depending on the backend flag. Enumerations arrive as integer
codes (see the module-level constants); the typed wrappers in the public
modules own validation, so kernels assume in-domain inputs.
"""

import math

import numpy as np

from ._accel import maybe_njit

# Interpolation of stamped series between time stamps.
INTERP_HOLD = 0
INTERP_LINEAR = 1

# Demand allocators.
ALLOC_RATIO = 0
ALLOC_SOFTMAX = 1
ALLOC_REDISTRIBUTION = 2

# Composition order of the behavioral score modifiers.
ORDER_PSY_THEN_WTA = 0
ORDER_WTA_THEN_PSY = 1
ORDER_WTA_ONLY = 2
ORDER_PSY_ONLY = 3
ORDER_NONE = 4

# Refresh reallocation form.
REFRESH_VECTOR = 0
REFRESH_MATRIX = 1

# New-customer rate specification.
NC_CONSTANT = 0
NC_SERIES = 1

# Integration scheme.
METHOD_EULER = 0
METHOD_RK4 = 1

# Allocation result flags.
FLAG_OK = 0
FLAG_UNIFORM_FALLBACK = 1
FLAG_OVERFLOW_RESCALED = 2


# ---------------------------------------------------------------------------
# stamped-series lookup
# ---------------------------------------------------------------------------

@maybe_njit
def bracket_index(times, t):
    """Rightmost stamp index with times[idx] <= t, clamped into range."""
    idx = np.searchsorted(times, t, side="right") - 1
    if idx < 0:
        idx = 0
    last = times.shape[0] - 1
    if idx > last:
        idx = last
    return idx


@maybe_njit
def cube_at(times, cube, t, interp):
    """Sample a (T, n, k) stamped cube at time t (hold or linear)."""
    i0 = bracket_index(times, t)
    last = times.shape[0] - 1
    if interp == INTERP_HOLD or i0 >= last or t <= times[0]:
        return cube[i0].copy()
    t0 = times[i0]
    t1 = times[i0 + 1]
    w = (t - t0) / (t1 - t0)
    return (1.0 - w) * cube[i0] + w * cube[i0 + 1]


@maybe_njit
def series_at(times, values, t, interp):
    """Sample a (T,) stamped series at time t (hold or linear)."""
    i0 = bracket_index(times, t)
    last = times.shape[0] - 1
    if interp == INTERP_HOLD or i0 >= last or t <= times[0]:
        return values[i0]
    t0 = times[i0]
    t1 = times[i0 + 1]
    w = (t - t0) / (t1 - t0)
    return (1.0 - w) * values[i0] + w * values[i0 + 1]


# ---------------------------------------------------------------------------
# competitiveness scores
# ---------------------------------------------------------------------------

@maybe_njit
def importance_weights(imp_t):
    """Per-segment attribute weights: each importance row normalized to sum 1."""
    n, k = imp_t.shape
    w = np.empty((n, k))
    for i in range(n):
        total = 0.0
        for z in range(k):
            total += imp_t[i, z]
        for z in range(k):
            w[i, z] = imp_t[i, z] / total
    return w


@maybe_njit
def market_scores(perf_t, w, s_min, s_max):
    """Importance-weighted performance per segment, clamped to the scale."""
    n, k = perf_t.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for z in range(k):
            acc += perf_t[i, z] * w[i, z]
        if acc < s_min:
            acc = s_min
        elif acc > s_max:
            acc = s_max
        out[i] = acc
    return out


@maybe_njit
def pairwise_scores(perf_t, w, s_min, s_max):
    """Antisymmetric pairwise matrix of scale-normalized score differentials.

    Upper triangle uses row i's weights; the lower triangle is the exact
    negation, so A + A.T is the zero matrix bit-for-bit.
    """
    n, k = perf_t.shape
    span = s_max - s_min
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for z in range(k):
                acc += (perf_t[i, z] - perf_t[j, z]) / span * w[i, z]
            if acc > 1.0:
                acc = 1.0
            elif acc < -1.0:
                acc = -1.0
            a[i, j] = acc
            a[j, i] = -acc
    return a


@maybe_njit
def argmax_lowest(values):
    """Index of the maximum; exact ties resolve to the lowest index."""
    best = 0
    for i in range(1, values.shape[0]):
        if values[i] > values[best]:
            best = i
    return best


# ---------------------------------------------------------------------------
# behavioral modification
# ---------------------------------------------------------------------------

@maybe_njit
def wta_vector(scores, i_max, wta):
    """Winner-take-all inflation/deflation of a score vector."""
    n = scores.shape[0]
    out = np.empty(n)
    for i in range(n):
        x = scores[i]
        if x > 0.0:
            kept = x * (1.0 - wta)
            if i == i_max:
                kept += x * wta
            out[i] = kept
        elif x < 0.0:
            out[i] = x - abs(x * wta)
        else:
            out[i] = -wta
    return out


@maybe_njit
def wta_matrix(scores, i_max, wta):
    """Winner-take-all applied entrywise; the delta keys on the row segment."""
    n = scores.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            x = scores[i, j]
            if x > 0.0:
                kept = x * (1.0 - wta)
                if i == i_max:
                    kept += x * wta
                out[i, j] = kept
            elif x < 0.0:
                out[i, j] = x - abs(x * wta)
            else:
                out[i, j] = -wta
    return out


@maybe_njit
def resistance_value(score, gamma, c):
    """Psychology resistance for a positive score, clamped into [0, 1]."""
    r = math.exp(gamma * score) + c
    if r < 0.0:
        r = 0.0
    elif r > 1.0:
        r = 1.0
    return r


@maybe_njit
def psychology_vector(scores, gamma, c):
    """Resistance-discounted scores; nonpositive entries take resistance 1."""
    n = scores.shape[0]
    out = np.empty(n)
    for i in range(n):
        x = scores[i]
        if x > 0.0:
            out[i] = x * (1.0 - resistance_value(x, gamma, c))
        elif x < 0.0:
            out[i] = x - abs(x)
        else:
            out[i] = 0.0
    return out


@maybe_njit
def psychology_matrix(scores, gamma, c):
    n = scores.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            x = scores[i, j]
            if x > 0.0:
                out[i, j] = x * (1.0 - resistance_value(x, gamma, c))
            elif x < 0.0:
                out[i, j] = x - abs(x)
            else:
                out[i, j] = 0.0
    return out


@maybe_njit
def modify_scores(market, pairwise, order, wta, gamma, c):
    """Compose the behavioral modifiers in the configured order.

    Returns the modified market vector, modified pairwise matrix, and the
    index of the maximal modified market score. When psychology precedes
    winner-take-all, the winner index is recomputed in between.
    """
    if order == ORDER_NONE:
        m = market.copy()
        p = pairwise.copy()
    elif order == ORDER_PSY_ONLY:
        m = psychology_vector(market, gamma, c)
        p = psychology_matrix(pairwise, gamma, c)
    elif order == ORDER_WTA_ONLY:
        i0 = argmax_lowest(market)
        m = wta_vector(market, i0, wta)
        p = wta_matrix(pairwise, i0, wta)
    elif order == ORDER_PSY_THEN_WTA:
        m1 = psychology_vector(market, gamma, c)
        p1 = psychology_matrix(pairwise, gamma, c)
        i1 = argmax_lowest(m1)
        m = wta_vector(m1, i1, wta)
        p = wta_matrix(p1, i1, wta)
    else:  # ORDER_WTA_THEN_PSY
        i0 = argmax_lowest(market)
        m1 = wta_vector(market, i0, wta)
        p1 = wta_matrix(pairwise, i0, wta)
        m = psychology_vector(m1, gamma, c)
        p = psychology_matrix(p1, gamma, c)
    return m, p, argmax_lowest(m)


# ---------------------------------------------------------------------------
# demand allocation
# ---------------------------------------------------------------------------

@maybe_njit
def alloc_ratio(scores):
    """Positive scores normalized by their sum; nonpositive entries get 0.

    With no positive score the vector degenerates; demand still has to go
    somewhere, so fall back to uniform and flag it.
    """
    n = scores.shape[0]
    h = np.zeros(n)
    total = 0.0
    for i in range(n):
        if scores[i] > 0.0:
            total += scores[i]
    if total <= 0.0:
        for i in range(n):
            h[i] = 1.0 / n
        return h, FLAG_UNIFORM_FALLBACK
    for i in range(n):
        if scores[i] > 0.0:
            h[i] = scores[i] / total
    return h, FLAG_OK


@maybe_njit
def alloc_softmax(scores, temperature):
    """Standard softmax with max-subtraction for stability."""
    n = scores.shape[0]
    top = scores[0]
    for i in range(1, n):
        if scores[i] > top:
            top = scores[i]
    h = np.empty(n)
    total = 0.0
    for i in range(n):
        e = math.exp((scores[i] - top) / temperature)
        h[i] = e
        total += e
    for i in range(n):
        h[i] /= total
    return h


@maybe_njit
def alloc_redistribution(scores, incumbent):
    """Positive scores taken as raw shares; the remainder stays home.

    The incumbent's own entry never joins the positive set. If the positive
    shares already exceed 1 the incumbent share would go negative, so the
    positives are rescaled to sum 1 instead and the result is flagged.
    """
    n = scores.shape[0]
    h = np.zeros(n)
    positive = 0.0
    for i in range(n):
        if i != incumbent and scores[i] > 0.0:
            positive += scores[i]
    if positive > 1.0:
        for i in range(n):
            if i != incumbent and scores[i] > 0.0:
                h[i] = scores[i] / positive
        return h, FLAG_OVERFLOW_RESCALED
    for i in range(n):
        if i != incumbent and scores[i] > 0.0:
            h[i] = scores[i]
    h[incumbent] = 1.0 - positive
    return h, FLAG_OK


@maybe_njit
def alloc_delta(n, i_max):
    """Kronecker delta allocation: everything to the winner."""
    h = np.zeros(n)
    h[i_max] = 1.0
    return h


@maybe_njit
def market_allocation(scores, allocator, wta, i_max, temperature):
    """Market-level allocation vector under the chosen allocator.

    wta == 1 short-circuits every allocator to the delta at i_max.
    Redistribution has no incumbent at the market level and falls back
    to the ratio rule there.
    """
    if wta == 1.0:
        return alloc_delta(scores.shape[0], i_max), FLAG_OK
    if allocator == ALLOC_SOFTMAX:
        return alloc_softmax(scores, temperature), FLAG_OK
    return alloc_ratio(scores)


@maybe_njit
def allocation_matrix(pairwise_mod, allocator, wta, i_max, temperature, diag_bias):
    """Column-stochastic allocation matrix over modified pairwise scores.

    Column j allocates segment j's outflow using the scores of every segment
    relative to incumbent j. An optional familiarity bias is added to the
    diagonal before renormalizing each column.
    """
    n = pairwise_mod.shape[0]
    out = np.empty((n, n))
    flags = np.zeros(n, dtype=np.int64)
    for j in range(n):
        col = pairwise_mod[:, j].copy()
        if wta == 1.0:
            h = alloc_delta(n, i_max)
            flag = FLAG_OK
        elif allocator == ALLOC_SOFTMAX:
            h = alloc_softmax(col, temperature)
            flag = FLAG_OK
        elif allocator == ALLOC_REDISTRIBUTION:
            h, flag = alloc_redistribution(col, j)
        else:
            h, flag = alloc_ratio(col)
        if diag_bias > 0.0:
            h[j] += diag_bias
            total = 0.0
            for i in range(n):
                total += h[i]
            for i in range(n):
                h[i] /= total
        for i in range(n):
            out[i, j] = h[i]
        flags[j] = flag
    return out, flags


# ---------------------------------------------------------------------------
# flow terms
# ---------------------------------------------------------------------------

@maybe_njit
def normalized_scores(market, s_min, s_max):
    """Map raw-scale market scores onto [0, 1]."""
    n = market.shape[0]
    span = s_max - s_min
    out = np.empty(n)
    for i in range(n):
        v = (market[i] - s_min) / span
        if v < 0.0:
            v = 0.0
        elif v > 1.0:
            v = 1.0
        out[i] = v
    return out


@maybe_njit
def obsolescence_rates(sizes, market_norm, decay, stickiness):
    """Outflow magnitude decay * (1 - a_norm) * (1 - s) * D, never negative."""
    n = sizes.shape[0]
    base = decay * (1.0 - stickiness)
    out = np.empty(n)
    for i in range(n):
        a = market_norm[i]
        if a < 0.0:
            a = 0.0
        elif a > 1.0:
            a = 1.0
        d = sizes[i]
        if d < 0.0:
            d = 0.0
        out[i] = base * (1.0 - a) * d
    return out


@maybe_njit
def flow_terms(sizes, t, times, perf, imp, s_min, s_max, interp,
               wta, stickiness, decay, gamma, c,
               allocator, order, refresh_mode, temperature, diag_bias,
               obs_use_modified, nc_mode, nc_const, nc_times, nc_values):
    """One right-hand-side evaluation: scores -> modifiers -> allocation -> flows.

    Returns (d_od, d_rd, d_bnd, h_market, refresh_matrix); the allocation
    outputs are handed back so the nonnegativity limiter can rebuild the
    refresh pool from scaled outflows without re-deriving scores.
    """
    n = sizes.shape[0]
    perf_t = cube_at(times, perf, t, interp)
    imp_t = cube_at(times, imp, t, interp)
    w = importance_weights(imp_t)
    market = market_scores(perf_t, w, s_min, s_max)
    pairwise = pairwise_scores(perf_t, w, s_min, s_max)
    m_mod, p_mod, i_max = modify_scores(market, pairwise, order, wta, gamma, c)

    if obs_use_modified == 1:
        norm = normalized_scores(m_mod, s_min, s_max)
    else:
        norm = normalized_scores(market, s_min, s_max)
    d_od = obsolescence_rates(sizes, norm, decay, stickiness)

    h_market, _ = market_allocation(m_mod, allocator, wta, i_max, temperature)

    nc = nc_const
    if nc_mode == NC_SERIES:
        nc = series_at(nc_times, nc_values, t, interp)
    d_bnd = np.empty(n)
    for i in range(n):
        d_bnd[i] = h_market[i] * nc

    if refresh_mode == REFRESH_MATRIX:
        refresh_h, _ = allocation_matrix(p_mod, allocator, wta, i_max,
                                         temperature, diag_bias)
        d_rd = np.dot(refresh_h, d_od)
    else:
        refresh_h = np.zeros((0, 0))
        pool = 0.0
        for i in range(n):
            pool += d_od[i]
        d_rd = np.empty(n)
        for i in range(n):
            d_rd[i] = h_market[i] * pool
    return d_od, d_rd, d_bnd, h_market, refresh_h


@maybe_njit
def limit_step(sizes, dt, d_od, d_rd, d_bnd, h_market, refresh_h, refresh_mode):
    """Scale outflows so no segment lands below zero over one step.

    A violating segment's outflow is reduced so it lands exactly at zero,
    then the refresh pool is rebuilt from the scaled outflows; repeated
    until the step is clean. Allocation shares stay fixed (they depend on
    scores only), so the iteration contracts the pool monotonically.
    """
    n = sizes.shape[0]
    for _ in range(500):
        clean = True
        for i in range(n):
            nxt = sizes[i] + dt * (d_bnd[i] + d_rd[i] - d_od[i])
            if nxt < -1e-13 * (1.0 + sizes[i]):
                clean = False
                d_od[i] = sizes[i] / dt + d_bnd[i] + d_rd[i]
        if clean:
            break
        if refresh_mode == REFRESH_MATRIX:
            d_rd = np.dot(refresh_h, d_od)
        else:
            pool = 0.0
            for i in range(n):
                pool += d_od[i]
            for i in range(n):
                d_rd[i] = h_market[i] * pool
    # absorb sub-tolerance residue into the outflow so sizes land exactly at 0
    for i in range(n):
        nxt = sizes[i] + dt * (d_bnd[i] + d_rd[i] - d_od[i])
        if nxt < 0.0:
            d_od[i] += nxt / dt
    return d_od, d_rd


@maybe_njit
def integrate(d0, t0, t_end, dt, method,
              times, perf, imp, s_min, s_max, interp,
              wta, stickiness, decay, gamma, c,
              allocator, order, refresh_mode, temperature, diag_bias,
              obs_use_modified, nc_mode, nc_const, nc_times, nc_values):
    """Fixed-step integration of sizes and cumulative flow accountants.

    Records the effective per-step rates (for RK4 the classical weighted
    stage combination), so each recorded step satisfies the conservation
    identities exactly as integrated. Returns
    (ts, sizes, cum_bnd, cum_rd, cum_od, rate_od, rate_rd, rate_bnd).
    """
    n = d0.shape[0]
    span = t_end - t0
    nfull = int(math.floor(span / dt + 1e-9))
    rem = span - nfull * dt
    partial = rem > 1e-12 * (1.0 + abs(t_end))
    m = nfull + (1 if partial else 0)

    ts = np.empty(m + 1)
    sizes = np.empty((m + 1, n))
    cum_bnd = np.zeros((m + 1, n))
    cum_rd = np.zeros((m + 1, n))
    cum_od = np.zeros((m + 1, n))
    rate_od = np.empty((m, n))
    rate_rd = np.empty((m, n))
    rate_bnd = np.empty((m, n))

    ts[0] = t0
    for i in range(n):
        sizes[0, i] = d0[i]
    state = d0.copy()

    for step in range(m):
        t = t0 + step * dt
        h = dt
        if step == nfull:
            h = rem
            t = t0 + nfull * dt

        if method == METHOD_RK4:
            od1, rd1, bnd1, hm1, rh1 = flow_terms(
                state, t, times, perf, imp, s_min, s_max, interp,
                wta, stickiness, decay, gamma, c, allocator, order,
                refresh_mode, temperature, diag_bias, obs_use_modified,
                nc_mode, nc_const, nc_times, nc_values)
            k1 = bnd1 + rd1 - od1
            od2, rd2, bnd2, _, _ = flow_terms(
                state + 0.5 * h * k1, t + 0.5 * h, times, perf, imp,
                s_min, s_max, interp, wta, stickiness, decay, gamma, c,
                allocator, order, refresh_mode, temperature, diag_bias,
                obs_use_modified, nc_mode, nc_const, nc_times, nc_values)
            k2 = bnd2 + rd2 - od2
            od3, rd3, bnd3, _, _ = flow_terms(
                state + 0.5 * h * k2, t + 0.5 * h, times, perf, imp,
                s_min, s_max, interp, wta, stickiness, decay, gamma, c,
                allocator, order, refresh_mode, temperature, diag_bias,
                obs_use_modified, nc_mode, nc_const, nc_times, nc_values)
            k3 = bnd3 + rd3 - od3
            od4, rd4, bnd4, _, _ = flow_terms(
                state + h * k3, t + h, times, perf, imp, s_min, s_max,
                interp, wta, stickiness, decay, gamma, c, allocator, order,
                refresh_mode, temperature, diag_bias, obs_use_modified,
                nc_mode, nc_const, nc_times, nc_values)
            d_od = (od1 + 2.0 * od2 + 2.0 * od3 + od4) / 6.0
            d_rd = (rd1 + 2.0 * rd2 + 2.0 * rd3 + rd4) / 6.0
            d_bnd = (bnd1 + 2.0 * bnd2 + 2.0 * bnd3 + bnd4) / 6.0
            h_market = hm1
            refresh_h = rh1
        else:
            d_od, d_rd, d_bnd, h_market, refresh_h = flow_terms(
                state, t, times, perf, imp, s_min, s_max, interp,
                wta, stickiness, decay, gamma, c, allocator, order,
                refresh_mode, temperature, diag_bias, obs_use_modified,
                nc_mode, nc_const, nc_times, nc_values)

        d_od, d_rd = limit_step(state, h, d_od, d_rd, d_bnd,
                                h_market, refresh_h, refresh_mode)

        for i in range(n):
            rate_od[step, i] = d_od[i]
            rate_rd[step, i] = d_rd[i]
            rate_bnd[step, i] = d_bnd[i]
            cum_od[step + 1, i] = cum_od[step, i] + h * d_od[i]
            cum_rd[step + 1, i] = cum_rd[step, i] + h * d_rd[i]
            cum_bnd[step + 1, i] = cum_bnd[step, i] + h * d_bnd[i]
            nxt = state[i] + h * (d_bnd[i] + d_rd[i] - d_od[i])
            if nxt < 0.0:
                nxt = 0.0
            state[i] = nxt
            sizes[step + 1, i] = nxt
        if step == nfull:
            ts[step + 1] = t_end
        else:
            ts[step + 1] = t0 + (step + 1) * dt

    return ts, sizes, cum_bnd, cum_rd, cum_od, rate_od, rate_rd, rate_bnd
