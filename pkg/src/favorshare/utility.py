"""Scalar network utility: weighted mean and cell-edge user rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alloc import AllocationState, Operator
from .radio import RadioParams, Snapshot, operator_rates


@dataclass(frozen=True)
class UtilityWeights:
    w_mean: float = 0.5
    w_edge: float = 0.5
    edge_percentile: float = 5.0

    def __post_init__(self):
        if self.w_mean < 0 or self.w_edge < 0:
            raise ValueError("utility weights must be non-negative")
        if not math.isclose(self.w_mean + self.w_edge, 1.0, abs_tol=1e-12):
            raise ValueError("w_mean + w_edge must equal 1")
        if not 0 < self.edge_percentile <= 50:
            raise ValueError("edge_percentile must lie in (0, 50]")


@dataclass(frozen=True)
class UtilityReport:
    operator: Operator
    mean_rate: float
    edge_rate: float
    utility: float


def nearest_rank(sorted_values: Sequence[float], percentile: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(percentile / 100 * n))
    return float(sorted_values[rank - 1])


def network_utility(rates, weights: UtilityWeights, operator: Operator = "") -> UtilityReport:
    """Utility of one operator from its users' rates.

    The edge rate is the nearest-rank percentile; an operator without active
    users has utility 0.
    """
    r = np.sort(np.asarray(rates, dtype=float))
    if r.size == 0:
        return UtilityReport(operator, 0.0, 0.0, 0.0)
    mean = float(np.mean(r))
    edge = nearest_rank(r, weights.edge_percentile)
    return UtilityReport(operator, mean, edge, weights.w_mean * mean + weights.w_edge * edge)


def operator_utility(operator: Operator, state: AllocationState, snapshot: Snapshot,
                     weights: UtilityWeights, radio: RadioParams = RadioParams()) -> UtilityReport:
    return network_utility(operator_rates(operator, state, snapshot, radio), weights, operator)


def utility_delta(operator: Operator, state_now: AllocationState, state_hyp: AllocationState,
                  snapshot: Snapshot, weights: UtilityWeights,
                  radio: RadioParams = RadioParams()) -> float:
    """Utility under ``state_hyp`` minus utility under ``state_now`` (positive = gain)."""
    if state_hyp is state_now:
        return 0.0
    now = operator_utility(operator, state_now, snapshot, weights, radio).utility
    hyp = operator_utility(operator, state_hyp, snapshot, weights, radio).utility
    return hyp - now
