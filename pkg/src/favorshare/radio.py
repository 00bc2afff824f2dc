"""Indoor deployment snapshots, path loss, SINR and per-user downlink rates.

Gains are carrier independent (no frequency-selective fading), so a user's
SINR on a carrier only depends on which opponent base stations transmit on
it under the current allocation.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .alloc import AllocationState, CarrierId, Operator, may_transmit


class LoadState(enum.Enum):
    HIGH = "High"
    LOW = "Low"

    def flipped(self) -> "LoadState":
        return LoadState.LOW if self is LoadState.HIGH else LoadState.HIGH


class Placement(enum.Enum):
    SEPARATED = "separated"
    INTERLEAVED = "interleaved"

    @classmethod
    def parse(cls, text: str) -> "Placement":
        return cls(text.strip().lower())


@dataclass(frozen=True)
class RadioParams:
    pl0_db: float = 38.5
    pl_exponent: float = 3.0
    d_min_m: float = 1.0
    shadowing_db: float = 4.0
    bandwidth_hz: float = 10e6
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    se_cap: float = 7.8

    @property
    def noise_mw(self) -> float:
        dbm = self.noise_psd_dbm_hz + 10 * math.log10(self.bandwidth_hz) + self.noise_figure_db
        return 10 ** (dbm / 10)


@dataclass(frozen=True)
class DeploymentParams:
    width_m: float = 100.0
    depth_m: float = 50.0
    bs_per_operator: int = 2
    tx_power_dbm: float = 24.0
    placement: Placement = Placement.INTERLEAVED


@dataclass(frozen=True)
class LoadParams:
    # operator -> {LoadState: mean user count}
    lambdas: Mapping[Operator, Mapping[LoadState, float]]
    p_stay: float = 0.8
    initial: Optional[Mapping[Operator, LoadState]] = None

    @property
    def operators(self) -> Tuple[Operator, ...]:
        return tuple(self.lambdas)

    def initial_state(self) -> Dict[Operator, LoadState]:
        if self.initial is None:
            return {op: LoadState.HIGH for op in self.operators}
        return dict(self.initial)


@dataclass(frozen=True)
class EnvConfig:
    load: LoadParams
    deployment: DeploymentParams = field(default_factory=DeploymentParams)
    radio: RadioParams = field(default_factory=RadioParams)

    @property
    def operators(self) -> Tuple[Operator, ...]:
        return self.load.operators


@dataclass(frozen=True)
class BaseStation:
    operator: Operator
    x: float
    y: float
    tx_power_dbm: float


@dataclass(frozen=True)
class Deployment:
    width_m: float
    depth_m: float
    base_stations: Tuple[BaseStation, ...]
    placement: Placement
    # operator -> equal-width (x0, x1) strips where its users are dropped
    service_areas: Mapping[Operator, Tuple[Tuple[float, float], ...]]

    def __post_init__(self):
        ops = {bs.operator for bs in self.base_stations}
        if set(self.service_areas) - ops:
            raise ValueError("every operator needs at least one base station")
        for bs in self.base_stations:
            if not (0 <= bs.x <= self.width_m and 0 <= bs.y <= self.depth_m):
                raise ValueError(f"base station {bs} lies outside the building")


def make_deployment(operators: Sequence[Operator], params: DeploymentParams) -> Deployment:
    n_ops = len(operators)
    m = params.bs_per_operator
    if m < 1:
        raise ValueError("each operator needs at least one base station")
    y = params.depth_m / 2
    stations = []
    areas = {}
    if params.placement is Placement.SEPARATED:
        strip = params.width_m / n_ops
        for i, op in enumerate(operators):
            x0 = i * strip
            areas[op] = [(x0, x0 + strip)]
            for k in range(m):
                stations.append(BaseStation(op, x0 + (k + 0.5) * strip / m, y,
                                            params.tx_power_dbm))
    else:
        # alternating strips, one base station per strip
        slot = params.width_m / (n_ops * m)
        for k in range(n_ops * m):
            op = operators[k % n_ops]
            stations.append(BaseStation(op, (k + 0.5) * slot, y, params.tx_power_dbm))
            areas.setdefault(op, []).append((k * slot, (k + 1) * slot))
    return Deployment(params.width_m, params.depth_m, tuple(stations), params.placement,
                      {op: tuple(strips) for op, strips in areas.items()})


def path_loss_db(distance_m, pl0_db: float = 38.5, exponent: float = 3.0,
                 d_min_m: float = 1.0):
    """Single-slope log-distance path loss, clamped below ``d_min_m``."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("distance must be non-negative")
    pl = pl0_db + 10 * exponent * np.log10(np.maximum(d, d_min_m))
    return float(pl) if pl.ndim == 0 else pl


@dataclass(frozen=True, eq=False)
class Snapshot:
    deployment: Deployment
    index: int
    load_state: Mapping[Operator, LoadState]
    user_operator: Tuple[Operator, ...]
    positions: np.ndarray          # (n_users, 2) metres
    gains: np.ndarray              # (n_users, n_bs) linear channel gain
    serving: np.ndarray            # (n_users,) base-station index

    @property
    def n_users(self) -> int:
        return len(self.user_operator)

    @functools.cached_property
    def bs_operator(self) -> Tuple[Operator, ...]:
        return tuple(bs.operator for bs in self.deployment.base_stations)

    @functools.cached_property
    def rx_power_mw(self) -> np.ndarray:
        tx = np.array([10 ** (bs.tx_power_dbm / 10) for bs in self.deployment.base_stations])
        return self.gains * tx[None, :]

    @functools.cached_property
    def opponent_rx_mw(self) -> np.ndarray:
        """Received power with own-operator links zeroed."""
        opp = (np.array(self.bs_operator, dtype=object)[None, :]
               != np.array(self.user_operator, dtype=object)[:, None])
        return self.rx_power_mw * opp

    @functools.cached_property
    def signal_mw(self) -> np.ndarray:
        return self.rx_power_mw[np.arange(self.n_users), self.serving]

    def users_of(self, operator: Operator) -> np.ndarray:
        return np.array([i for i, op in enumerate(self.user_operator) if op == operator],
                        dtype=int)

    def cell_sizes(self) -> np.ndarray:
        """Number of users attached to each user's serving base station."""
        counts = np.bincount(self.serving, minlength=len(self.deployment.base_stations))
        return counts[self.serving]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.index).encode())
        h.update(repr(sorted((op, s.value) for op, s in self.load_state.items())).encode())
        h.update("|".join(self.user_operator).encode())
        h.update(np.ascontiguousarray(self.positions).tobytes())
        h.update(np.ascontiguousarray(self.gains).tobytes())
        h.update(np.ascontiguousarray(self.serving).tobytes())
        return h.hexdigest()


def next_load(rng: np.random.Generator, prev: Mapping[Operator, LoadState],
              p_stay: float) -> Dict[Operator, LoadState]:
    return {op: (s if rng.random() < p_stay else s.flipped()) for op, s in prev.items()}


def draw_snapshot(env: EnvConfig, seed: int, index: int,
                  prev_load: Optional[Mapping[Operator, LoadState]] = None) -> Snapshot:
    """Draw one deployment realization.

    Pure function of ``(env, seed, index, prev_load)``: the generator is
    seeded from ``(seed, index)`` so snapshots can be re-drawn independently.
    ``prev_load`` defaults to the configured initial load states.
    """
    if prev_load is None:
        prev_load = env.load.initial_state()
    rng = np.random.default_rng(np.random.SeedSequence((seed, index)))
    deployment = make_deployment(env.operators, env.deployment)
    radio = env.radio
    load = next_load(rng, {op: prev_load[op] for op in env.operators}, env.load.p_stay)

    user_ops = []
    pos_chunks = []
    for op in env.operators:
        n = int(rng.poisson(env.load.lambdas[op][load[op]]))
        strips = np.array(deployment.service_areas[op])
        pick = strips[rng.integers(0, len(strips), n)]
        x = pick[:, 0] + rng.random(n) * (pick[:, 1] - pick[:, 0])
        xy = np.column_stack([x, rng.uniform(0, deployment.depth_m, n)])
        user_ops.extend([op] * n)
        pos_chunks.append(xy)
    positions = np.vstack(pos_chunks) if pos_chunks else np.zeros((0, 2))

    bs_xy = np.array([(bs.x, bs.y) for bs in deployment.base_stations])
    dist = np.linalg.norm(positions[:, None, :] - bs_xy[None, :, :], axis=-1)
    pl = path_loss_db(dist, radio.pl0_db, radio.pl_exponent, radio.d_min_m)
    shadow = rng.normal(0.0, radio.shadowing_db, size=dist.shape)
    gains = 10 ** ((-pl + shadow) / 10)

    bs_ops = np.array([bs.operator for bs in deployment.base_stations])
    own = bs_ops[None, :] == np.array(user_ops, dtype=object)[:, None]
    serving = np.where(own, gains, -np.inf).argmax(axis=1) if user_ops else np.zeros(0, int)

    return Snapshot(deployment=deployment, index=index, load_state=load,
                    user_operator=tuple(user_ops), positions=positions,
                    gains=gains, serving=serving.astype(int))


# -- link evaluation --------------------------------------------------------


def _carriers(state: AllocationState) -> Tuple[CarrierId, ...]:
    return tuple(sorted(state.rights))


def _tx_matrix(state: AllocationState, snapshot: Snapshot) -> np.ndarray:
    """(n_bs, n_carriers) boolean: base station transmits on carrier."""
    carriers = _carriers(state)
    per_op = {op: [may_transmit(state.rights[c], op) for c in carriers]
              for op in set(snapshot.bs_operator)}
    return np.array([per_op[op] for op in snapshot.bs_operator], dtype=bool).reshape(
        len(snapshot.bs_operator), len(carriers))


def interference_matrix_mw(state: AllocationState, snapshot: Snapshot,
                           tx: Optional[np.ndarray] = None) -> np.ndarray:
    """(n_users, n_carriers) aggregate opponent received power in mW."""
    if tx is None:
        tx = _tx_matrix(state, snapshot)
    return snapshot.opponent_rx_mw @ tx.astype(float)


def interference_term_mw(user: int, carrier: CarrierId, state: AllocationState,
                         snapshot: Snapshot) -> float:
    """Opponent interference seen by one user on one carrier, summed link by link."""
    right = state.rights[carrier]
    me = snapshot.user_operator[user]
    total = 0.0
    for b, bs in enumerate(snapshot.deployment.base_stations):
        if bs.operator != me and may_transmit(right, bs.operator):
            total += 10 ** (bs.tx_power_dbm / 10) * float(snapshot.gains[user, b])
    return total


def sinr(user: int, carrier: CarrierId, state: AllocationState, snapshot: Snapshot,
         radio: RadioParams = RadioParams()) -> float:
    """Linear SINR of ``user`` on ``carrier``; the serving cell must transmit there."""
    op = snapshot.user_operator[user]
    if carrier not in state.rights or not may_transmit(state.rights[carrier], op):
        raise ValueError(f"operator {op} does not transmit on carrier {carrier}")
    b = int(snapshot.serving[user])
    bs = snapshot.deployment.base_stations[b]
    signal = 10 ** (bs.tx_power_dbm / 10) * float(snapshot.gains[user, b])
    return signal / (interference_term_mw(user, carrier, state, snapshot) + radio.noise_mw)


def user_rates(state: AllocationState, snapshot: Snapshot,
               radio: RadioParams = RadioParams()) -> np.ndarray:
    """Downlink rate in bit/s of every user in the snapshot under ``state``."""
    if snapshot.n_users == 0:
        return np.zeros(0)
    tx = _tx_matrix(state, snapshot)
    serving_tx = tx[snapshot.serving]
    interference = interference_matrix_mw(state, snapshot, tx)
    se = np.minimum(np.log2(1 + snapshot.signal_mw[:, None] / (interference + radio.noise_mw)),
                    radio.se_cap)
    share = radio.bandwidth_hz / snapshot.cell_sizes()
    return share * np.sum(np.where(serving_tx, se, 0.0), axis=1)


def user_rate(user: int, state: AllocationState, snapshot: Snapshot,
              radio: RadioParams = RadioParams()) -> float:
    return float(user_rates(state, snapshot, radio)[user])


def operator_rates(operator: Operator, state: AllocationState, snapshot: Snapshot,
                   radio: RadioParams = RadioParams()) -> np.ndarray:
    return user_rates(state, snapshot, radio)[snapshot.users_of(operator)]


@dataclass(frozen=True, eq=False)
class InterferenceReport:
    operator: Operator
    users: np.ndarray                  # snapshot user indices
    carriers: Tuple[CarrierId, ...]
    dbm: np.ndarray                    # (len(users), len(carriers)); -inf when no interferer

    def linear_mw(self) -> np.ndarray:
        return np.where(np.isneginf(self.dbm), 0.0, 10 ** (self.dbm / 10))

    def entry_dbm(self, user: int, carrier: CarrierId) -> float:
        row = int(np.flatnonzero(self.users == user)[0])
        return float(self.dbm[row, self.carriers.index(carrier)])


def measure_interference(operator: Operator, state: AllocationState,
                         snapshot: Snapshot) -> InterferenceReport:
    """What ``operator``'s users would report about opponent signal levels.

    Uses only the snapshot's link gains and the opponents' transmit sets, no
    exchange with the interfering base stations.
    """
    users = snapshot.users_of(operator)
    mw = interference_matrix_mw(state, snapshot)[users] if len(users) else \
        np.zeros((0, len(state.rights)))
    with np.errstate(divide="ignore"):
        dbm = np.where(mw > 0, 10 * np.log10(np.where(mw > 0, mw, 1.0)), -np.inf)
    return InterferenceReport(operator, users, _carriers(state), dbm)
