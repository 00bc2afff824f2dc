"""Carriers, usage rights and the exact apply/revert of spectrum usage favors.

All operations here are pure: an :class:`AllocationState` is treated as a
value and every transition returns a fresh copy.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple, Union

Operator = str
CarrierId = int


class AllocationError(ValueError):
    pass


class PlanError(AllocationError):
    """Malformed band plan (overlapping or missing carriers)."""


class FavorConflictError(AllocationError):
    """The target carrier already carries an active favor, or its right does not admit the favor."""


class ScenarioError(AllocationError):
    """Favor type not admissible in the run's sharing scenario."""


class FavorNotFoundError(AllocationError):
    pass


class SharingScenario(enum.Enum):
    LIMITED_POOL = "LimitedPool"
    MUTUAL_RENTING = "MutualRenting"

    @classmethod
    def parse(cls, text: str) -> "SharingScenario":
        key = text.strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "limitedpool": cls.LIMITED_POOL,
            "pool": cls.LIMITED_POOL,
            "mutualrenting": cls.MUTUAL_RENTING,
            "renting": cls.MUTUAL_RENTING,
        }
        if key not in aliases:
            raise ValueError(f"unknown sharing scenario {text!r}")
        return aliases[key]


class FavorType(enum.Enum):
    POOL_EXCLUSIVE = "PoolExclusive"
    RENT_SHARED = "RentShared"
    RENT_EXCLUSIVE = "RentExclusive"

    def admissible_in(self, scenario: SharingScenario) -> bool:
        if self is FavorType.POOL_EXCLUSIVE:
            return scenario is SharingScenario.LIMITED_POOL
        return scenario is SharingScenario.MUTUAL_RENTING


# -- carrier rights ---------------------------------------------------------


@dataclass(frozen=True)
class SharedPool:
    def __str__(self) -> str:
        return "SharedPool"


@dataclass(frozen=True)
class ExclusiveTo:
    operator: Operator

    def __str__(self) -> str:
        return f"ExclusiveTo({self.operator})"


@dataclass(frozen=True)
class OwnedBy:
    operator: Operator

    def __str__(self) -> str:
        return f"OwnedBy({self.operator})"


@dataclass(frozen=True)
class RentedShared:
    owner: Operator
    renter: Operator

    def __str__(self) -> str:
        return f"RentedShared({self.owner},{self.renter})"


@dataclass(frozen=True)
class RentedExclusive:
    owner: Operator
    renter: Operator

    def __str__(self) -> str:
        return f"RentedExclusive({self.owner},{self.renter})"


CarrierRight = Union[SharedPool, ExclusiveTo, OwnedBy, RentedShared, RentedExclusive]


def may_transmit(right: CarrierRight, operator: Operator) -> bool:
    if isinstance(right, SharedPool):
        return True
    if isinstance(right, (ExclusiveTo, OwnedBy)):
        return right.operator == operator
    if isinstance(right, RentedShared):
        return operator in (right.owner, right.renter)
    if isinstance(right, RentedExclusive):
        return right.renter == operator
    raise TypeError(f"not a carrier right: {right!r}")


# -- band plan --------------------------------------------------------------


@dataclass(frozen=True)
class BandPlan:
    dedicated: Mapping[Operator, FrozenSet[CarrierId]]
    pool: FrozenSet[CarrierId]
    scenario: SharingScenario

    def __post_init__(self):
        object.__setattr__(self, "dedicated",
                           {op: frozenset(cs) for op, cs in self.dedicated.items()})
        object.__setattr__(self, "pool", frozenset(self.pool))

    @property
    def operators(self) -> Tuple[Operator, ...]:
        return tuple(self.dedicated)

    @property
    def carriers(self) -> Tuple[CarrierId, ...]:
        out = set(self.pool)
        for cs in self.dedicated.values():
            out |= cs
        return tuple(sorted(out))

    def owner_of(self, carrier: CarrierId) -> Optional[Operator]:
        for op, cs in self.dedicated.items():
            if carrier in cs:
                return op
        return None

    def validate(self) -> None:
        if len(self.dedicated) < 2:
            raise PlanError("a band plan needs at least two operators")
        seen: Dict[CarrierId, str] = {}
        for label, cs in [*((f"dedicated[{op}]", cs) for op, cs in self.dedicated.items()),
                          ("pool", self.pool)]:
            for c in cs:
                if not isinstance(c, int) or c < 0:
                    raise PlanError(f"carrier ids must be non-negative integers, got {c!r}")
                if c in seen:
                    raise PlanError(f"carrier {c} appears in both {seen[c]} and {label}")
                seen[c] = label
        if self.scenario is SharingScenario.MUTUAL_RENTING and self.pool:
            raise PlanError("MutualRenting plans have no shared pool")


# -- favors and allocation state --------------------------------------------


@dataclass(frozen=True)
class Favor:
    id: int
    favor_type: FavorType
    carrier: CarrierId
    asker: Operator
    grantor: Operator
    granted_at: int
    duration: int
    remaining_duration: int

    def __post_init__(self):
        if self.asker == self.grantor:
            raise ValueError("a favor needs distinct asker and grantor")
        if self.duration < 1:
            raise ValueError("favor duration must be at least one snapshot")
        if not 0 <= self.remaining_duration <= self.duration:
            raise ValueError("remaining_duration outside [0, duration]")


@dataclass(frozen=True)
class AllocationState:
    rights: Mapping[CarrierId, CarrierRight]
    active_favors: FrozenSet[Favor] = field(default_factory=frozenset)

    def favor_on(self, carrier: CarrierId) -> Optional[Favor]:
        for f in self.active_favors:
            if f.carrier == carrier:
                return f
        return None

    def find_favor(self, favor_id: int) -> Optional[Favor]:
        for f in self.active_favors:
            if f.id == favor_id:
                return f
        return None


def initial_allocation(plan: BandPlan) -> AllocationState:
    plan.validate()
    rights: Dict[CarrierId, CarrierRight] = {}
    for op, cs in plan.dedicated.items():
        for c in cs:
            rights[c] = OwnedBy(op)
    for c in plan.pool:
        rights[c] = SharedPool()
    return AllocationState(rights=dict(sorted(rights.items())))


def transmit_set(state: AllocationState, operator: Operator) -> FrozenSet[CarrierId]:
    return frozenset(c for c, r in state.rights.items() if may_transmit(r, operator))


def _granted_right(favor: Favor) -> CarrierRight:
    if favor.favor_type is FavorType.POOL_EXCLUSIVE:
        return ExclusiveTo(favor.asker)
    if favor.favor_type is FavorType.RENT_SHARED:
        return RentedShared(favor.grantor, favor.asker)
    return RentedExclusive(favor.grantor, favor.asker)


def _prior_right(favor: Favor) -> CarrierRight:
    if favor.favor_type is FavorType.POOL_EXCLUSIVE:
        return SharedPool()
    return OwnedBy(favor.grantor)


def check_favor(state: AllocationState, favor: Favor,
                scenario: Optional[SharingScenario] = None) -> None:
    """Raise if ``favor`` cannot be applied to ``state``."""
    if scenario is not None and not favor.favor_type.admissible_in(scenario):
        raise ScenarioError(f"{favor.favor_type.value} is not admissible in {scenario.value}")
    if favor.carrier not in state.rights:
        raise FavorConflictError(f"unknown carrier {favor.carrier}")
    if state.favor_on(favor.carrier) is not None:
        raise FavorConflictError(f"carrier {favor.carrier} already carries an active favor")
    current = state.rights[favor.carrier]
    if current != _prior_right(favor):
        raise FavorConflictError(
            f"{favor.favor_type.value} on carrier {favor.carrier} needs right "
            f"{_prior_right(favor)}, found {current}")


def apply_favor(state: AllocationState, favor: Favor,
                scenario: Optional[SharingScenario] = None) -> AllocationState:
    check_favor(state, favor, scenario)
    rights = dict(state.rights)
    rights[favor.carrier] = _granted_right(favor)
    favor = dataclasses.replace(favor, remaining_duration=favor.duration)
    return AllocationState(rights=rights, active_favors=state.active_favors | {favor})


def expire_favor(state: AllocationState, favor: Favor) -> AllocationState:
    """Remove ``favor`` and restore the carrier's pre-favor right.

    The favor is matched by id; the simulation only calls this once the
    favor's remaining duration has reached zero.
    """
    active = state.find_favor(favor.id)
    if active is None:
        raise FavorNotFoundError(f"favor {favor.id} is not active")
    rights = dict(state.rights)
    rights[active.carrier] = _prior_right(active)
    return AllocationState(rights=rights, active_favors=state.active_favors - {active})


def tick(state: AllocationState) -> Tuple[AllocationState, Tuple[Favor, ...]]:
    """Decrement every active favor and expire those that reach zero.

    Returns the new state and the expired favors, sorted by id.
    """
    decremented = frozenset(
        dataclasses.replace(f, remaining_duration=f.remaining_duration - 1)
        for f in state.active_favors)
    state = AllocationState(rights=state.rights, active_favors=decremented)
    expired = tuple(sorted((f for f in decremented if f.remaining_duration == 0),
                           key=lambda f: f.id))
    for f in expired:
        state = expire_favor(state, f)
    return state, expired


def candidate_favors(state: AllocationState, plan: BandPlan, asker: Operator,
                     grantor: Operator,
                     rent_types: Iterable[FavorType] = (FavorType.RENT_SHARED,
                                                        FavorType.RENT_EXCLUSIVE),
                     ) -> Tuple[Tuple[FavorType, CarrierId], ...]:
    """Favor (type, carrier) pairs ``asker`` could legally request from ``grantor`` now."""
    out = []
    if plan.scenario is SharingScenario.LIMITED_POOL:
        for c in sorted(plan.pool):
            if isinstance(state.rights[c], SharedPool) and state.favor_on(c) is None:
                out.append((FavorType.POOL_EXCLUSIVE, c))
    else:
        for c in sorted(plan.dedicated[grantor]):
            if state.rights[c] == OwnedBy(grantor) and state.favor_on(c) is None:
                for ft in rent_types:
                    out.append((ft, c))
    return tuple(out)
