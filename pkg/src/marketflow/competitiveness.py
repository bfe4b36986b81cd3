"""Attribute weights, market-level scores, and the pairwise score matrix.

The market score of a segment is its importance-weighted attribute
performance on the raw scale. The pairwise score of (i, j) is the weighted,
scale-normalized performance differential in [-1, 1], computed with
segment i's weights for i < j and mirrored with a sign flip so that
antisymmetry holds exactly even when importance differs across segments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import AttributePanel, DegenerateWeightsError, _frozen_array


@dataclass(frozen=True, eq=False)
class CompetitivenessView:
    """All scores of one instant: market vector, pairwise matrix, winner index.

    i_max is the index of the maximal market score; exact ties resolve to
    the lowest index so runs are reproducible.
    """

    t: float
    market: np.ndarray
    pairwise: np.ndarray
    i_max: int

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "market", _frozen_array(self.market))
        object.__setattr__(self, "pairwise", _frozen_array(self.pairwise))
        object.__setattr__(self, "i_max", int(self.i_max))

    @property
    def n(self) -> int:
        return self.market.shape[0]


def _weights_at(panel: AttributePanel, t: float) -> np.ndarray:
    imp_t = panel.imp_at(t)
    row_sums = imp_t.sum(axis=1)
    if np.any(row_sums <= 0.0):
        bad = int(np.argmax(row_sums <= 0.0))
        raise DegenerateWeightsError(
            f"degenerate weights: importance row of segment {panel.segments[bad]} "
            f"at t={t:g} sums to {row_sums[bad]:g}")
    return kernels.importance_weights(imp_t)


def attribute_weights(panel: AttributePanel, t: float, i: int) -> np.ndarray:
    """Segment i's attribute weights at time t: importance normalized to sum 1."""
    return _weights_at(panel, t)[i]


def market_score(panel: AttributePanel, t: float, i: int) -> float:
    """Weighted attribute performance of segment i at t, on the raw scale."""
    perf_t = panel.perf_at(t)
    w = _weights_at(panel, t)
    return float(kernels.market_scores(perf_t, w, panel.scale.s_min, panel.scale.s_max)[i])


def pairwise_score(panel: AttributePanel, t: float, i: int, j: int) -> float:
    """How much more competitive segment i is than j at t, in [-1, 1]."""
    perf_t = panel.perf_at(t)
    w = _weights_at(panel, t)
    return float(kernels.pairwise_scores(perf_t, w, panel.scale.s_min, panel.scale.s_max)[i, j])


def competitiveness_view(panel: AttributePanel, t: float) -> CompetitivenessView:
    """Assemble the full score picture at time t."""
    perf_t = panel.perf_at(t)
    w = _weights_at(panel, t)
    market = kernels.market_scores(perf_t, w, panel.scale.s_min, panel.scale.s_max)
    pairwise = kernels.pairwise_scores(perf_t, w, panel.scale.s_min, panel.scale.s_max)
    return CompetitivenessView(t=t, market=market, pairwise=pairwise,
                               i_max=kernels.argmax_lowest(market))
