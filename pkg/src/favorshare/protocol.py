"""Favor bookkeeping, ask/grant decisions and per-snapshot negotiation.

Each operator keeps one :class:`FavorLedger` per opponent holding its own
utility losses when it granted and its own utility gains when it received.
Operators exchange nothing but negotiation messages; every decision is taken
on local ledgers and local utility estimates.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .alloc import (AllocationError, AllocationState, BandPlan, CarrierId, Favor, FavorType,
                    Operator, apply_favor, candidate_favors, check_favor)
from .radio import RadioParams, Snapshot
from .utility import UtilityWeights, operator_utility, utility_delta

log = logging.getLogger(__name__)


class ProtocolError(RuntimeError):
    pass


class DenyReason(enum.Enum):
    CAP_REACHED = "CapReached"
    UTILITY_REFUSED = "UtilityRefused"
    CONFLICT = "Conflict"


class Role(enum.Enum):
    GRANTED = "Granted"
    RECEIVED = "Received"


# -- ledger -----------------------------------------------------------------


@dataclass(frozen=True)
class FavorLedger:
    cap_s: int = 4
    losses_when_granting: Tuple[float, ...] = ()
    gains_when_receiving: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.cap_s < 1:
            raise ValueError("cap_s must be a positive integer")

    @property
    def n_granted(self) -> int:
        return len(self.losses_when_granting)

    @property
    def n_received(self) -> int:
        return len(self.gains_when_receiving)

    @property
    def outstanding(self) -> int:
        """Net favors granted to the opponent and not yet returned."""
        return self.n_granted - self.n_received

    def to_dict(self) -> dict:
        return {"cap_s": self.cap_s,
                "losses_when_granting": list(self.losses_when_granting),
                "gains_when_receiving": list(self.gains_when_receiving)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FavorLedger":
        return cls(int(d["cap_s"]),
                   tuple(float(x) for x in d["losses_when_granting"]),
                   tuple(float(x) for x in d["gains_when_receiving"]))


def avg_past_loss(ledger: FavorLedger, bootstrap: float = 0.0) -> float:
    if not ledger.losses_when_granting:
        return bootstrap
    return math.fsum(ledger.losses_when_granting) / ledger.n_granted


def avg_past_gain(ledger: FavorLedger, bootstrap: float = 0.0) -> float:
    if not ledger.gains_when_receiving:
        return bootstrap
    return math.fsum(ledger.gains_when_receiving) / ledger.n_received


def should_ask(ledger: FavorLedger, immediate_gain: float, bootstrap: float = 0.0) -> bool:
    return immediate_gain > 0 and immediate_gain > avg_past_loss(ledger, bootstrap)


def should_grant(ledger: FavorLedger, immediate_loss: float,
                 bootstrap: float = 0.0) -> Tuple[bool, Optional[DenyReason]]:
    """Grant unless the cap is hit or the loss exceeds the average past gain.

    A favor that costs nothing is always granted below the cap, so an
    opponent is never punished past the cap.
    """
    if ledger.outstanding >= ledger.cap_s:
        return False, DenyReason.CAP_REACHED
    if immediate_loss == 0 or immediate_loss < avg_past_gain(ledger, bootstrap):
        return True, None
    return False, DenyReason.UTILITY_REFUSED


def record_outcome(ledger: FavorLedger, role: Role, magnitude: float) -> FavorLedger:
    if not magnitude >= 0:
        raise ValueError(f"ledger magnitudes must be non-negative, got {magnitude}")
    if role is Role.GRANTED:
        return dataclasses.replace(ledger,
                                   losses_when_granting=ledger.losses_when_granting + (magnitude,))
    return dataclasses.replace(ledger, gains_when_receiving=ledger.gains_when_receiving + (magnitude,))


# -- messages ---------------------------------------------------------------


@dataclass(frozen=True)
class FavorRequest:
    id: int
    sender: Operator
    recipient: Operator
    favor_type: FavorType
    carrier: CarrierId
    duration: int


@dataclass(frozen=True)
class FavorGrant:
    id: int
    sender: Operator
    recipient: Operator


@dataclass(frozen=True)
class FavorDeny:
    id: int
    sender: Operator
    recipient: Operator
    reason: DenyReason


NegotiationMessage = Union[FavorRequest, FavorGrant, FavorDeny]


@dataclass(frozen=True)
class ApplyFavor:
    favor: Favor


# -- agents -----------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolParams:
    cap_s: int = 4
    favor_duration: int = 1
    ask_bootstrap: float = 0.0
    grant_bootstrap_fraction: float = 0.15
    rent_types: Tuple[FavorType, ...] = (FavorType.RENT_SHARED, FavorType.RENT_EXCLUSIVE)
    alternate_turns: bool = True

    def __post_init__(self):
        if self.cap_s < 1:
            raise ValueError("cap_s must be a positive integer")
        if self.favor_duration < 1:
            raise ValueError("favor_duration must be at least one snapshot")
        if self.ask_bootstrap < 0 or self.grant_bootstrap_fraction < 0:
            raise ValueError("bootstrap thresholds must be non-negative")


@dataclass(frozen=True)
class OperatorAgent:
    name: Operator
    weights: UtilityWeights
    ledgers: Mapping[Operator, FavorLedger]
    # request id -> (request, gain estimated when asking)
    pending: Mapping[int, Tuple[FavorRequest, float]] = field(default_factory=dict)

    @classmethod
    def fresh(cls, name: Operator, opponents: Sequence[Operator], weights: UtilityWeights,
              cap_s: int = 4) -> "OperatorAgent":
        return cls(name, weights, {op: FavorLedger(cap_s) for op in opponents if op != name})

    def with_ledger(self, opponent: Operator, ledger: FavorLedger) -> "OperatorAgent":
        return dataclasses.replace(self, ledgers={**self.ledgers, opponent: ledger})


@dataclass(frozen=True)
class NegotiationContext:
    snapshot: Snapshot
    state: AllocationState
    plan: BandPlan
    params: ProtocolParams = ProtocolParams()
    radio: RadioParams = RadioParams()


def _grant_side(agent: OperatorAgent, req: FavorRequest, ctx: NegotiationContext):
    favor = Favor(id=req.id, favor_type=req.favor_type, carrier=req.carrier, asker=req.sender,
                  grantor=agent.name, granted_at=ctx.snapshot.index, duration=req.duration,
                  remaining_duration=req.duration)
    try:
        check_favor(ctx.state, favor, ctx.plan.scenario)
    except AllocationError:
        return agent, [FavorDeny(req.id, agent.name, req.sender, DenyReason.CONFLICT)], []
    ledger = agent.ledgers[req.sender]
    hyp = apply_favor(ctx.state, favor)
    loss = max(0.0, -utility_delta(agent.name, ctx.state, hyp, ctx.snapshot, agent.weights,
                                   ctx.radio))
    own = operator_utility(agent.name, ctx.state, ctx.snapshot, agent.weights, ctx.radio).utility
    ok, reason = should_grant(ledger, loss, ctx.params.grant_bootstrap_fraction * own)
    if not ok:
        return agent, [FavorDeny(req.id, agent.name, req.sender, reason)], []
    agent = agent.with_ledger(req.sender, record_outcome(ledger, Role.GRANTED, loss))
    return agent, [FavorGrant(req.id, agent.name, req.sender)], [ApplyFavor(favor)]


def handle_message(agent: OperatorAgent, msg: NegotiationMessage, ctx: NegotiationContext
                   ) -> Tuple[OperatorAgent, List[NegotiationMessage], List[ApplyFavor]]:
    """Process one incoming message for ``agent``.

    Raises :class:`ProtocolError` for replies that do not match a pending
    request; the agent value itself is never mutated.
    """
    if msg.recipient != agent.name:
        raise ProtocolError(f"message for {msg.recipient} delivered to {agent.name}")
    if isinstance(msg, FavorRequest):
        return _grant_side(agent, msg, ctx)
    if msg.id not in agent.pending:
        raise ProtocolError(f"{agent.name} has no pending request {msg.id}")
    req, gain = agent.pending[msg.id]
    pending = {k: v for k, v in agent.pending.items() if k != msg.id}
    agent = dataclasses.replace(agent, pending=pending)
    if isinstance(msg, FavorGrant):
        ledger = record_outcome(agent.ledgers[req.recipient], Role.RECEIVED, gain)
        agent = agent.with_ledger(req.recipient, ledger)
    return agent, [], []


def best_candidate(agent: OperatorAgent, opponent: Operator, ctx: NegotiationContext,
                   excluded=frozenset()) -> Optional[Tuple[float, FavorType, CarrierId]]:
    """Highest-gain favor ``agent`` could ask ``opponent`` for, or None."""
    best = None
    now = operator_utility(agent.name, ctx.state, ctx.snapshot, agent.weights, ctx.radio).utility
    for ft, c in candidate_favors(ctx.state, ctx.plan, agent.name, opponent,
                                  ctx.params.rent_types):
        if (ft, c) in excluded:
            continue
        hyp = apply_favor(ctx.state, Favor(-1, ft, c, agent.name, opponent,
                                           ctx.snapshot.index, 1, 1))
        gain = operator_utility(agent.name, hyp, ctx.snapshot, agent.weights,
                                ctx.radio).utility - now
        if best is None or gain > best[0]:
            best = (gain, ft, c)
    return best


def make_request(agent: OperatorAgent, opponent: Operator, favor_type: FavorType,
                 carrier: CarrierId, gain: float, favor_id: int, duration: int
                 ) -> Tuple[OperatorAgent, FavorRequest]:
    req = FavorRequest(favor_id, agent.name, opponent, favor_type, carrier, duration)
    return dataclasses.replace(agent, pending={**agent.pending, favor_id: (req, gain)}), req


# -- transcript -------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptRecord:
    snapshot: int
    sender: Operator
    recipient: Operator
    kind: str
    favor_id: int
    carrier: CarrierId
    favor_type: str
    reason: str
    sender_granted: int
    sender_received: int
    recipient_granted: int
    recipient_received: int

    def to_line(self) -> str:
        d = dataclasses.asdict(self)
        d = {"snapshot": d.pop("snapshot"), "from": d.pop("sender"), "to": d.pop("recipient"), **d}
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_line(cls, line: str) -> "TranscriptRecord":
        d = json.loads(line)
        d["sender"] = d.pop("from")
        d["recipient"] = d.pop("to")
        return cls(**d)


def _record(index: int, msg: NegotiationMessage, req: FavorRequest,
            agents: Mapping[Operator, OperatorAgent]) -> TranscriptRecord:
    if isinstance(msg, FavorRequest):
        kind, reason = "FavorRequest", "Ask"
    elif isinstance(msg, FavorGrant):
        kind, reason = "FavorGrant", "Granted"
    else:
        kind, reason = "FavorDeny", msg.reason.value
    s = agents[msg.sender].ledgers[msg.recipient]
    r = agents[msg.recipient].ledgers[msg.sender]
    return TranscriptRecord(index, msg.sender, msg.recipient, kind, msg.id, req.carrier,
                            req.favor_type.value, reason, s.n_granted, s.n_received,
                            r.n_granted, r.n_received)


# -- per-snapshot negotiation -----------------------------------------------


@dataclass
class NegotiationOutcome:
    agents: Dict[Operator, OperatorAgent]
    state: AllocationState
    transcript: List[TranscriptRecord]
    next_favor_id: int


def negotiation_order(operators: Sequence[Operator], seed: int, index: int) -> List[Operator]:
    rng = np.random.default_rng(np.random.SeedSequence((seed, index, 0x6E6567)))
    return [operators[i] for i in rng.permutation(len(operators))]


def negotiate_snapshot(agents: Mapping[Operator, OperatorAgent], state: AllocationState,
                       snapshot: Snapshot, plan: BandPlan, params: ProtocolParams = ProtocolParams(),
                       radio: RadioParams = RadioParams(), seed: int = 0,
                       next_favor_id: int = 0) -> NegotiationOutcome:
    """Run one negotiation round on ``snapshot``.

    Operators act in a seeded random order. Each request targets the asker's
    best remaining candidate and is answered synchronously. With
    ``alternate_turns`` operators issue one request per turn and the round
    ends once a full pass issues none; otherwise each operator in turn keeps
    asking until it stops. A ``CapReached`` refusal silences the asker until
    another grant happens; other refusals rule out that (type, carrier) for
    the rest of the round.
    """
    if len(agents) != 2:
        raise ValueError("favor negotiation is defined for exactly two operators")
    agents = dict(agents)
    order = negotiation_order(sorted(agents), seed, snapshot.index)
    excluded: Dict[Operator, set] = {op: set() for op in agents}
    blocked: set = set()
    transcript: List[TranscriptRecord] = []
    fid = next_favor_id

    def attempt(asker: Operator) -> bool:
        nonlocal state, fid
        if asker in blocked:
            return False
        grantor = next(op for op in agents if op != asker)
        ctx = NegotiationContext(snapshot, state, plan, params, radio)
        choice = best_candidate(agents[asker], grantor, ctx, excluded[asker])
        if choice is None:
            return False
        gain, ft, carrier = choice
        if not should_ask(agents[asker].ledgers[grantor], gain, params.ask_bootstrap):
            return False
        agents[asker], req = make_request(agents[asker], grantor, ft, carrier, gain, fid,
                                          params.favor_duration)
        fid += 1
        transcript.append(_record(snapshot.index, req, req, agents))

        agents[grantor], replies, actions = handle_message(agents[grantor], req, ctx)
        for reply in replies:
            try:
                agents[asker], _, _ = handle_message(agents[asker], reply, ctx)
            except ProtocolError as exc:
                log.warning("dropped message: %s", exc)
                continue
            transcript.append(_record(snapshot.index, reply, req, agents))
            if isinstance(reply, FavorDeny):
                if reply.reason is DenyReason.CAP_REACHED:
                    blocked.add(asker)
                else:
                    excluded[asker].add((ft, carrier))
        for action in actions:
            state = apply_favor(state, action.favor, plan.scenario)
            blocked.clear()
        return True

    if params.alternate_turns:
        while any([attempt(op) for op in order]):
            pass
    else:
        for op in order:
            while attempt(op):
                pass
    return NegotiationOutcome(agents, state, transcript, fid)


def dump_agents(agents: Mapping[Operator, OperatorAgent]) -> str:
    """Serialize ledgers for run resume; floats round-trip exactly through JSON."""
    return json.dumps({name: {opp: led.to_dict() for opp, led in a.ledgers.items()}
                       for name, a in sorted(agents.items())}, sort_keys=True)


def load_ledgers(text: str) -> Dict[Operator, Dict[Operator, FavorLedger]]:
    raw = json.loads(text)
    return {name: {opp: FavorLedger.from_dict(d) for opp, d in led.items()}
            for name, led in raw.items()}
