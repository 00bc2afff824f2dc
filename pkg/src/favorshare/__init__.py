"""Favor-based coordination protocol for inter-operator spectrum sharing."""

from .alloc import (AllocationState, BandPlan, Favor, FavorType, SharingScenario, apply_favor,
                    expire_favor, initial_allocation, transmit_set)
from .config import default_config, parse_config
from .protocol import FavorLedger, should_ask, should_grant
from .sim import RunConfig, orthogonal_allocation, run_horizon

__all__ = [
    "AllocationState", "BandPlan", "Favor", "FavorType", "SharingScenario", "apply_favor",
    "expire_favor", "initial_allocation", "transmit_set", "default_config", "parse_config",
    "FavorLedger", "should_ask", "should_grant", "RunConfig", "orthogonal_allocation",
    "run_horizon",
]
