import dataclasses

import numpy as np
import pytest

from favorshare.alloc import (BandPlan, ExclusiveTo, OwnedBy, SharedPool, SharingScenario,
                              initial_allocation, transmit_set)
from favorshare.config import default_config, with_overrides
from favorshare.protocol import OperatorAgent
from favorshare.radio import interference_term_mw, user_rates
from favorshare.sim import (ORTHOGONAL, PROTOCOL, orthogonal_allocation, run_horizon, step,
                            snapshot_stream)
from conftest import build_snapshot

POOL = SharingScenario.LIMITED_POOL


def short(n=60, **kw):
    return with_overrides(default_config(), snapshots=n, warmup=min(10, n), **kw)


def fresh_agents(config):
    return {op: OperatorAgent.fresh(op, config.operators, config.weights[op],
                                    config.protocol.cap_s) for op in config.operators}


def test_orthogonal_even_pool():
    state = orthogonal_allocation(BandPlan({"A": {0}, "B": {1}}, set(range(2, 8)), POOL))
    assert [c for c, r in state.rights.items() if r == ExclusiveTo("A")] == [2, 3, 4]
    assert [c for c, r in state.rights.items() if r == ExclusiveTo("B")] == [5, 6, 7]


def test_orthogonal_odd_pool():
    state = orthogonal_allocation(BandPlan({"A": {0}, "B": {1}}, {2, 3, 4}, POOL))
    assert {c for c, r in state.rights.items() if r == ExclusiveTo("A")} == {2, 3}
    assert {c for c, r in state.rights.items() if r == ExclusiveTo("B")} == {4}


def test_orthogonal_renting_is_ownership():
    plan = BandPlan({"A": {0}, "B": {1}}, set(), SharingScenario.MUTUAL_RENTING)
    assert orthogonal_allocation(plan) == initial_allocation(plan)


def test_renting_band_plan_folds_pool_into_ownership():
    cfg = short(scenario=SharingScenario.MUTUAL_RENTING)
    plan = cfg.band_plan()
    assert plan.pool == frozenset()
    assert plan.dedicated == {"A": {0, 2, 3, 4}, "B": {1, 5, 6, 7}}


def test_idle_step_keeps_initial_rates():
    cfg = short()
    snap = build_snapshot([("A", 10), ("B", 40)], [("A", 12), ("B", 38)])
    state = initial_allocation(cfg.band_plan())
    agents = fresh_agents(cfg)
    # ledgers that forbid any ask: every past loss is enormous
    for op, opp in (("A", "B"), ("B", "A")):
        led = dataclasses.replace(agents[op].ledgers[opp], losses_when_granting=(1e12,))
        agents[op] = agents[op].with_ledger(opp, led)
    out = step(state, agents, snap, cfg)
    assert out.transcript == [] and out.state == state
    assert np.array_equal(out.rates, user_rates(state, snap))


def test_favor_expires_before_next_negotiation():
    cfg = short()
    snap = build_snapshot([("A", 10), ("B", 40)], [("A", 20), ("A", 25), ("B", 14)])
    out = step(initial_allocation(cfg.band_plan()), fresh_agents(cfg), snap, cfg)
    assert out.transcript
    granted = {r.favor_id for r in out.transcript if r.kind == "FavorGrant"}
    assert granted == {f.id for f in out.state.active_favors}
    nxt = step(out.state, out.agents, dataclasses.replace(snap, index=1), cfg,
               next_favor_id=out.next_favor_id)
    assert {f.id for f in nxt.expired} == granted
    assert not granted & {f.id for f in nxt.state.active_favors}


def test_baseline_isolation_on_pool_carriers():
    cfg = short(20)
    plan = cfg.band_plan()
    ortho = orthogonal_allocation(plan)
    for snap in snapshot_stream(cfg):
        for u, op in enumerate(snap.user_operator):
            for c in plan.pool & transmit_set(ortho, op):
                assert interference_term_mw(u, c, ortho, snap) == 0.0


def test_snapshot_parity_between_schemes():
    cfg = short(30)
    full, base = run_horizon(cfg), run_horizon(cfg, baseline_only=True)
    assert full.digests == base.digests
    assert base.schemes == (ORTHOGONAL,)
    for a, b in zip(full.rates[ORTHOGONAL], base.rates[ORTHOGONAL]):
        assert np.array_equal(a, b)


def test_conservation_and_cap_each_step():
    cfg = short(80)
    plan = cfg.band_plan()
    state = initial_allocation(plan)
    agents = fresh_agents(cfg)
    fid = 0
    for snap in snapshot_stream(cfg):
        out = step(state, agents, snap, cfg, plan, fid)
        state, agents, fid = out.state, out.agents, out.next_favor_id
        sets = [transmit_set(state, op) for op in cfg.operators]
        for c in plan.pool:
            assert any(c in s for s in sets)
        for op, ag in agents.items():
            for led in ag.ledgers.values():
                assert led.outstanding <= cfg.protocol.cap_s


def test_horizon_zero_is_empty():
    res = run_horizon(short(0))
    assert res.digests == [] and res.transcript == []
    assert all(v == [] for v in res.rates.values())


def test_horizon_deterministic():
    a, b = run_horizon(short(40, seed=3)), run_horizon(short(40, seed=3))
    assert a.digests == b.digests and a.transcript == b.transcript
    for s in a.schemes:
        assert all(np.array_equal(x, y) for x, y in zip(a.rates[s], b.rates[s]))


def test_renting_horizon_runs():
    res = run_horizon(short(40, scenario=SharingScenario.MUTUAL_RENTING))
    kinds = {r.favor_type for r in res.transcript}
    assert kinds <= {"RentShared", "RentExclusive"}


def test_cooperative_start():
    """Empty ledgers and asymmetric load: a favor is granted within 10 snapshots."""
    for seed in range(10):
        res = run_horizon(short(10, seed=seed))
        assert any(r.kind == "FavorGrant" for r in res.transcript), seed


def test_single_operator_config_rejected():
    cfg = short()
    lam = {"A": cfg.env.load.lambdas["A"]}
    env = dataclasses.replace(cfg.env, load=dataclasses.replace(cfg.env.load, lambdas=lam))
    with pytest.raises(ValueError):
        run_horizon(dataclasses.replace(cfg, env=env, weights={"A": cfg.weights["A"]}))
