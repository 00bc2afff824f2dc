"""Multi-snapshot horizons: protocol scheme vs. static orthogonal split."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .alloc import (AllocationState, BandPlan, ExclusiveTo, Favor, Operator, SharingScenario,
                    initial_allocation, tick, transmit_set)
from .protocol import (OperatorAgent, ProtocolParams, TranscriptRecord, negotiate_snapshot)
from .radio import (EnvConfig, InterferenceReport, LoadParams, LoadState, Snapshot,
                    draw_snapshot, measure_interference, user_rates)
from .utility import UtilityReport, UtilityWeights, network_utility

log = logging.getLogger(__name__)

PROTOCOL = "protocol"
ORTHOGONAL = "orthogonal"


@dataclass(frozen=True)
class RunConfig:
    env: EnvConfig
    weights: Mapping[Operator, UtilityWeights]
    scenario: SharingScenario = SharingScenario.LIMITED_POOL
    dedicated_per_operator: int = 1
    pool_size: int = 6
    protocol: ProtocolParams = ProtocolParams()
    snapshots: int = 1000
    warmup: int = 50
    seed: int = 0

    @property
    def operators(self) -> Tuple[Operator, ...]:
        return self.env.operators

    def validate(self) -> None:
        ops = self.operators
        if len(ops) != 2:
            raise ValueError("the negotiation logic is defined for exactly two operators")
        if set(self.weights) != set(ops):
            raise ValueError("utility weights must be given for every operator")
        if self.dedicated_per_operator < 0 or self.pool_size < 0:
            raise ValueError("carrier counts must be non-negative")
        if self.snapshots < 0 or self.warmup < 0:
            raise ValueError("snapshots and warmup must be non-negative")
        if not 0 <= self.env.load.p_stay <= 1:
            raise ValueError("p_stay must lie in [0, 1]")
        self.band_plan().validate()

    def band_plan(self) -> BandPlan:
        """Carriers 0..n*d-1 are dedicated (round-robin), the pool follows.

        In MutualRenting the pool is handed out as owned spectrum following
        the orthogonal split, so both scenarios share one baseline.
        """
        ops = self.operators
        d = self.dedicated_per_operator
        dedicated = {op: set(range(i, len(ops) * d, len(ops))) for i, op in enumerate(ops)}
        pool = list(range(len(ops) * d, len(ops) * d + self.pool_size))
        if self.scenario is SharingScenario.LIMITED_POOL:
            return BandPlan(dedicated, frozenset(pool), self.scenario)
        for op, block in zip(ops, _split(pool, len(ops))):
            dedicated[op] |= set(block)
        return BandPlan(dedicated, frozenset(), self.scenario)


def _split(items: List[int], n: int) -> List[List[int]]:
    """Contiguous split of ``items``; lower-indexed parts take the remainder."""
    base, extra = divmod(len(items), n)
    out, start = [], 0
    for i in range(n):
        size = base + (1 if i < extra else 0)
        out.append(items[start:start + size])
        start += size
    return out


def orthogonal_allocation(plan: BandPlan) -> AllocationState:
    state = initial_allocation(plan)
    if plan.scenario is SharingScenario.MUTUAL_RENTING:
        return state
    rights = dict(state.rights)
    for op, block in zip(plan.operators, _split(sorted(plan.pool), len(plan.operators))):
        for c in block:
            rights[c] = ExclusiveTo(op)
    return AllocationState(rights=rights)


@dataclass
class StepResult:
    state: AllocationState
    agents: Dict[Operator, OperatorAgent]
    rates: np.ndarray
    transcript: List[TranscriptRecord]
    expired: Tuple[Favor, ...]
    reports: Dict[Operator, InterferenceReport]
    next_favor_id: int


def step(state: AllocationState, agents: Mapping[Operator, OperatorAgent], snapshot: Snapshot,
         config: RunConfig, plan: Optional[BandPlan] = None, next_favor_id: int = 0) -> StepResult:
    """One protocol round: expire, measure, negotiate, evaluate rates."""
    plan = plan or config.band_plan()
    state, expired = tick(state)
    reports = {op: measure_interference(op, state, snapshot) for op in config.operators}
    out = negotiate_snapshot(agents, state, snapshot, plan, config.protocol, config.env.radio,
                             config.seed, next_favor_id)
    rates = user_rates(out.state, snapshot, config.env.radio)
    return StepResult(out.state, out.agents, rates, out.transcript, expired, reports,
                      out.next_favor_id)


@dataclass
class HorizonResult:
    config: RunConfig
    digests: List[str] = field(default_factory=list)
    load_states: List[Dict[Operator, LoadState]] = field(default_factory=list)
    user_operator: List[Tuple[Operator, ...]] = field(default_factory=list)
    # scheme -> per-snapshot rate arrays (aligned with user_operator)
    rates: Dict[str, List[np.ndarray]] = field(default_factory=dict)
    reports: Dict[str, List[Dict[Operator, UtilityReport]]] = field(default_factory=dict)
    transcript: List[TranscriptRecord] = field(default_factory=list)
    # per snapshot: (asker-side holder, opponent) -> (n_granted, n_received)
    counters: List[Dict[Tuple[Operator, Operator], Tuple[int, int]]] = field(default_factory=list)
    # per snapshot: operator -> number of carriers it may transmit on (protocol scheme)
    carriers_held: List[Dict[Operator, int]] = field(default_factory=list)
    agents: Dict[Operator, OperatorAgent] = field(default_factory=dict)

    @property
    def schemes(self) -> Tuple[str, ...]:
        return tuple(self.rates)

    def favors_received(self, operator: Operator) -> int:
        return sum(1 for r in self.transcript if r.kind == "FavorGrant" and r.recipient == operator)

    def favors_granted(self, operator: Operator) -> int:
        return sum(1 for r in self.transcript if r.kind == "FavorGrant" and r.sender == operator)

    def mean_utility(self, scheme: str, operator: Operator, skip_warmup: bool = True) -> float:
        start = self.config.warmup if skip_warmup else 0
        vals = [rep[operator].utility for rep in self.reports[scheme][start:]]
        return float(np.mean(vals)) if vals else 0.0


def snapshot_stream(config: RunConfig):
    prev = config.env.load.initial_state()
    for t in range(config.snapshots):
        snap = draw_snapshot(config.env, config.seed, t, prev)
        prev = dict(snap.load_state)
        yield snap


def _reports(rates: np.ndarray, snapshot: Snapshot, config: RunConfig) -> Dict[Operator, UtilityReport]:
    ops = np.array(snapshot.user_operator, dtype=object)
    return {op: network_utility(rates[ops == op], config.weights[op], op) for op in config.operators}


def run_horizon(config: RunConfig, baseline_only: bool = False) -> HorizonResult:
    """Evaluate both schemes on one shared snapshot stream."""
    config.validate()
    plan = config.band_plan()
    result = HorizonResult(config)
    schemes = (ORTHOGONAL,) if baseline_only else (PROTOCOL, ORTHOGONAL)
    for s in schemes:
        result.rates[s] = []
        result.reports[s] = []

    ortho = orthogonal_allocation(plan)
    state = initial_allocation(plan)
    agents = {op: OperatorAgent.fresh(op, config.operators, config.weights[op],
                                      config.protocol.cap_s) for op in config.operators}
    next_id = 0
    for snap in snapshot_stream(config):
        result.digests.append(snap.digest())
        result.load_states.append(dict(snap.load_state))
        result.user_operator.append(snap.user_operator)
        if not baseline_only:
            out = step(state, agents, snap, config, plan, next_id)
            state, agents, next_id = out.state, out.agents, out.next_favor_id
            result.rates[PROTOCOL].append(out.rates)
            result.reports[PROTOCOL].append(_reports(out.rates, snap, config))
            result.transcript.extend(out.transcript)
            result.counters.append({(a, b): (led.n_granted, led.n_received)
                                    for a, ag in agents.items() for b, led in ag.ledgers.items()})
            result.carriers_held.append({op: len(transmit_set(state, op))
                                         for op in config.operators})
        base = user_rates(ortho, snap, config.env.radio)
        result.rates[ORTHOGONAL].append(base)
        result.reports[ORTHOGONAL].append(_reports(base, snap, config))
    result.agents = agents
    return result
