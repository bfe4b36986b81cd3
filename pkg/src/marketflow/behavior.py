"""Behavioral modifiers on competitiveness scores.

Two effects reshape scores before demand is allocated. Winner-take-all
transfers a fraction ``wta`` of every positive score to the current winner
and pushes non-positive scores further down; at wta=1 only the winner keeps
a positive score. Psychology discounts positive scores by a resistance
factor that decays exponentially in the score itself, so small leads are
perceived as weaker than they are while large leads pass through.

Both keep the sign structure: a positive score never becomes negative,
positives only shrink, negatives only grow in magnitude.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import BehaviorParams, DomainBoundError, ModifierOrder, _frozen_array
from .competitiveness import CompetitivenessView


class ResistanceKind(enum.Enum):
    """Which score family a resistance value is computed for.

    Pairwise scores live in [-1, 1] and any non-positive score gets full
    resistance. Market scores live on the raw nonnegative scale, where a
    negative value has no meaning and is rejected.
    """

    PAIRWISE = "pairwise"
    MARKET = "market"


@dataclass(frozen=True, eq=False)
class ModifiedScores:
    """Scores after behavioral modification, plus what produced them."""

    market_mod: np.ndarray
    pairwise_mod: np.ndarray
    i_max: int
    wta: float
    gamma: float
    c: float
    modifier_order: ModifierOrder

    def __post_init__(self):
        object.__setattr__(self, "market_mod", _frozen_array(self.market_mod))
        object.__setattr__(self, "pairwise_mod", _frozen_array(self.pairwise_mod))
        object.__setattr__(self, "i_max", int(self.i_max))


def _check_wta(wta: float) -> float:
    wta = float(wta)
    if not 0.0 <= wta <= 1.0:
        raise DomainBoundError("behavior.wta", f"must lie in [0, 1], got {wta}")
    return wta


def _check_psych(gamma: float, c: float):
    gamma, c = float(gamma), float(c)
    if not gamma < 0.0:
        raise DomainBoundError("behavior.gamma", f"must be strictly negative, got {gamma}")
    if not c >= 0.0:
        raise DomainBoundError("behavior.c", f"must be >= 0, got {c}")
    return gamma, c


def apply_wta(scores: np.ndarray, i_max: int, wta: float) -> np.ndarray:
    """Winner-take-all on a score vector or matrix.

    Per entry a: positive -> the winner keeps a, others keep a*(1-wta);
    negative -> a - |a*wta|; zero -> -wta. For matrices the winner delta
    keys on the row's segment index (the winner is a market-level notion).
    """
    wta = _check_wta(wta)
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim == 1:
        return kernels.wta_vector(arr, int(i_max), wta)
    if arr.ndim == 2:
        return kernels.wta_matrix(np.ascontiguousarray(arr), int(i_max), wta)
    raise ValueError(f"scores must be a vector or square matrix, got ndim={arr.ndim}")


def resistance(a: float, gamma: float, c: float,
               kind: ResistanceKind = ResistanceKind.PAIRWISE) -> float:
    """Resistance in [0, 1] felt against a score a.

    exp(gamma*a) + c for positive a, clamped into [0, 1]; full resistance
    for a pairwise score at or below zero and for a market score of zero.
    """
    gamma, c = _check_psych(gamma, c)
    a = float(a)
    if kind is ResistanceKind.MARKET and a < 0.0:
        raise DomainBoundError(
            "score", f"market scores are nonnegative by contract, got {a}")
    if a <= 0.0:
        return 1.0
    return float(kernels.resistance_value(a, gamma, c))


def apply_psychology(scores: np.ndarray, gamma: float, c: float) -> np.ndarray:
    """Resistance-discount a score vector or matrix.

    With r = resistance(a): positive a -> a*(1-r); negative a -> a - |a*r|
    with r pinned at 1, i.e. the score doubles; zero stays zero.
    """
    gamma, c = _check_psych(gamma, c)
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim == 1:
        return kernels.psychology_vector(arr, gamma, c)
    if arr.ndim == 2:
        return kernels.psychology_matrix(np.ascontiguousarray(arr), gamma, c)
    raise ValueError(f"scores must be a vector or square matrix, got ndim={arr.ndim}")


def modify(view: CompetitivenessView, params: BehaviorParams) -> ModifiedScores:
    """Apply the configured modifiers, in the configured order, to a view.

    When psychology runs first, the winner index is recomputed on the
    discounted market scores before winner-take-all uses it; the reported
    i_max is the argmax of the final modified market vector either way.
    """
    market_mod, pairwise_mod, i_max = kernels.modify_scores(
        view.market, view.pairwise, params.modifier_order.code,
        params.wta, params.gamma, params.c)
    return ModifiedScores(market_mod=market_mod, pairwise_mod=pairwise_mod,
                          i_max=i_max, wta=params.wta, gamma=params.gamma,
                          c=params.c, modifier_order=params.modifier_order)
