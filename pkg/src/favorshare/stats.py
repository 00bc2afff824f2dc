"""Empirical CDFs of user-rate samples."""

from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from .utility import nearest_rank

log = logging.getLogger(__name__)

PERCENTILE_GRID = tuple(range(1, 100))


def empirical_cdf(samples: Sequence[float]) -> List[Tuple[float, float]]:
    """Right-continuous empirical CDF at each distinct sample value."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        log.warning("empirical_cdf called with no samples")
        return []
    values, counts = np.unique(x, return_counts=True)
    probs = np.cumsum(counts) / x.size
    probs[-1] = 1.0
    return [(float(v), float(p)) for v, p in zip(values, probs)]


def percentile_series(samples: Sequence[float], grid=PERCENTILE_GRID) -> List[Tuple[int, float]]:
    """Generalized inverse of the empirical CDF on a percentile grid.

    Each entry is the smallest sample value whose CDF reaches ``p / 100``.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        log.warning("no samples for percentile export")
        return []
    return [(p, nearest_rank(x, p)) for p in grid]
