"""Demand allocation: scores in, normalized share vectors out.

Three allocators with different appetites for negative scores. Ratio
normalizes the positive scores and starves everything else. Softmax gives
every segment strictly positive mass, so weak segments still win demand.
Redistribution reads positive pairwise scores as raw shares taken from an
incumbent, which keeps whatever is not taken. A winner-take-all degree of 1
collapses all of them to the same delta vector at the winner.

Every vector and every matrix column sums to 1; degenerate inputs fall back
rather than fail, and the fallback is flagged on the result.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Allocator, DomainBoundError, _frozen_array


class AllocationFlag(enum.Enum):
    """How an allocation was produced: cleanly, or via a documented fallback."""

    OK = kernels.FLAG_OK
    UNIFORM_FALLBACK = kernels.FLAG_UNIFORM_FALLBACK
    OVERFLOW_RESCALED = kernels.FLAG_OVERFLOW_RESCALED


@dataclass(frozen=True, eq=False)
class AllocationVector:
    """A normalized demand-share vector plus its production flag."""

    h: np.ndarray
    flag: AllocationFlag = AllocationFlag.OK

    def __post_init__(self):
        object.__setattr__(self, "h", _frozen_array(self.h))

    @property
    def n(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True, eq=False)
class AllocationMatrix:
    """Column-stochastic matrix: column j distributes segment j's outflow."""

    H: np.ndarray
    flags: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "H", _frozen_array(self.H))
        if not self.flags:
            object.__setattr__(self, "flags",
                               tuple(AllocationFlag.OK for _ in range(self.H.shape[1])))

    @property
    def n(self) -> int:
        return self.H.shape[0]


def _vector(scores) -> np.ndarray:
    arr = np.ascontiguousarray(scores, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValueError(f"scores must be a non-empty vector, got shape {arr.shape}")
    return arr


def allocate_ratio(scores) -> AllocationVector:
    """Positive scores normalized by their sum; non-positive entries get 0.

    If no score is positive the rule is undefined, so the share is uniform
    and the result is flagged UNIFORM_FALLBACK.
    """
    h, flag = kernels.alloc_ratio(_vector(scores))
    return AllocationVector(h=h, flag=AllocationFlag(int(flag)))


def allocate_softmax(scores, temperature: float = 1.0) -> AllocationVector:
    """Softmax shares (max-subtracted for stability); all entries positive."""
    temperature = float(temperature)
    if not temperature > 0.0:
        raise DomainBoundError("behavior.softmax_temperature",
                               f"must be positive, got {temperature}")
    return AllocationVector(h=kernels.alloc_softmax(_vector(scores), temperature))


def allocate_redistribution(scores, incumbent: int) -> AllocationVector:
    """Positive scores against an incumbent become raw shares; the rest stays.

    scores[incumbent] is the self-comparison (zero by construction) and
    never joins the positive set. If the positives already exceed 1 the
    incumbent's remainder would be negative, so the positives are rescaled
    to sum 1, the incumbent keeps nothing, and the result is flagged
    OVERFLOW_RESCALED.
    """
    arr = _vector(scores)
    incumbent = int(incumbent)
    if not 0 <= incumbent < arr.shape[0]:
        raise ValueError(f"incumbent index {incumbent} out of range for n={arr.shape[0]}")
    h, flag = kernels.alloc_redistribution(arr, incumbent)
    return AllocationVector(h=h, flag=AllocationFlag(int(flag)))


def allocate_wta(scores, i_max: int) -> AllocationVector:
    """The delta vector: all demand to the winner."""
    arr = _vector(scores)
    i_max = int(i_max)
    if not 0 <= i_max < arr.shape[0]:
        raise ValueError(f"i_max index {i_max} out of range for n={arr.shape[0]}")
    return AllocationVector(h=kernels.alloc_delta(arr.shape[0], i_max))


def market_allocation(scores, allocator: Allocator, wta: float, i_max: int,
                      temperature: float = 1.0) -> AllocationVector:
    """Market-level allocation under the chosen allocator.

    wta=1 short-circuits every allocator to the delta at i_max.
    Redistribution has no incumbent at the market level, so it degrades to
    the ratio rule here; its pairwise form lives in allocation_matrix.
    """
    arr = _vector(scores)
    h, flag = kernels.market_allocation(arr, allocator.code, float(wta),
                                        int(i_max), float(temperature))
    return AllocationVector(h=h, flag=AllocationFlag(int(flag)))


def allocation_matrix(pairwise_mod, allocator: Allocator, wta: float, i_max: int,
                      temperature: float = 1.0, diag_bias: float = 0.0) -> AllocationMatrix:
    """Column-stochastic allocation matrix from modified pairwise scores.

    Column j applies the allocator to every segment's score relative to
    incumbent j; wta=1 makes every column the delta at i_max. diag_bias
    adds a familiarity weight to the diagonal before renormalizing.
    """
    arr = np.ascontiguousarray(pairwise_mod, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"pairwise scores must be a square matrix, got shape {arr.shape}")
    diag_bias = float(diag_bias)
    if not 0.0 <= diag_bias <= 1.0:
        raise DomainBoundError("behavior.diag_bias", f"must lie in [0, 1], got {diag_bias}")
    H, flags = kernels.allocation_matrix(arr, allocator.code, float(wta),
                                         int(i_max), float(temperature), diag_bias)
    return AllocationMatrix(H=H, flags=tuple(AllocationFlag(int(f)) for f in flags))
