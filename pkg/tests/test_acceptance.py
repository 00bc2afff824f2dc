"""End-to-end acceptance criteria, each at its stated tolerance.

The horizon runs (ten seeds of the asymmetric and of the symmetric default
experiment) are computed once per session and shared between criteria.
"""

import dataclasses
import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from favorshare.alloc import (BandPlan, Favor, SharingScenario, apply_favor, candidate_favors,
                              expire_favor, initial_allocation, transmit_set)
from favorshare.cli import main
from favorshare.config import default_config, symmetric_config, with_overrides
from favorshare.protocol import DenyReason, FavorLedger, should_ask, should_grant
from favorshare.radio import (EnvConfig, LoadParams, LoadState, interference_term_mw,
                              draw_snapshot, measure_interference, sinr)
from favorshare.sim import ORTHOGONAL, PROTOCOL, run_horizon

pytestmark = pytest.mark.slow

SEEDS = range(10)
CAP_S = 4


@pytest.fixture(scope="session")
def asymmetric_runs():
    runs = {}
    for seed in SEEDS:
        t0 = time.perf_counter()
        res = run_horizon(with_overrides(default_config(), seed=seed))
        runs[seed] = (res, time.perf_counter() - t0)
    return runs


@pytest.fixture(scope="session")
def symmetric_runs():
    return {seed: run_horizon(symmetric_config(seed=seed)) for seed in SEEDS}


# -- 1 ----------------------------------------------------------------------

def _random_case(rng, scenario):
    n_ded = rng.randint(1, 3)
    n_pool = rng.randint(1, 8) if scenario is SharingScenario.LIMITED_POOL else 0
    dedicated = {"A": set(range(0, 2 * n_ded, 2)), "B": set(range(1, 2 * n_ded, 2))}
    plan = BandPlan(dedicated, set(range(2 * n_ded, 2 * n_ded + n_pool)), scenario)
    state = initial_allocation(plan)
    fid = 0
    for _ in range(rng.randint(0, 6)):
        asker = rng.choice("AB")
        grantor = "B" if asker == "A" else "A"
        cands = candidate_favors(state, plan, asker, grantor)
        if cands:
            ft, c = rng.choice(cands)
            d = rng.randint(1, 4)
            state = apply_favor(state, Favor(fid, ft, c, asker, grantor, 0, d, d), scenario)
            fid += 1
    asker = rng.choice("AB")
    grantor = "B" if asker == "A" else "A"
    cands = candidate_favors(state, plan, asker, grantor)
    if not cands:
        return None
    ft, c = rng.choice(cands)
    d = rng.randint(1, 4)
    return state, Favor(fid, ft, c, asker, grantor, rng.randint(0, 999), d, rng.randint(0, d))


def test_criterion_1_revert_exactness(acceptance_log):
    rng = random.Random(20240601)
    counts = {s: 0 for s in SharingScenario}
    failures = 0
    t0 = time.perf_counter()
    for scenario in itertools.cycle(SharingScenario):
        if min(counts.values()) >= 5000:
            break
        case = _random_case(rng, scenario)
        if case is None:
            continue
        state, favor = case
        if expire_favor(apply_favor(state, favor, scenario), favor) != state:
            failures += 1
        counts[scenario] += 1
    elapsed = time.perf_counter() - t0
    total = sum(counts.values())
    ok = failures == 0 and total >= 10_000 and elapsed < 5.0
    acceptance_log(1, ok, f"{total} pairs ({counts[SharingScenario.LIMITED_POOL]} pool, "
                          f"{counts[SharingScenario.MUTUAL_RENTING]} renting), "
                          f"{failures} mismatches, {elapsed:.2f} s")
    assert ok


# -- 2 ----------------------------------------------------------------------

VALUES = (0.0, 0.5, 1.0)


def _histories():
    for n in range(4):
        yield from itertools.product(VALUES, repeat=n)


def _oracle_mean(values, bootstrap):
    return Fraction(bootstrap) if not values else sum(map(Fraction, values)) / len(values)


# Decision tables, first matching row wins. Each row: (predicate, decision).
ASK_TABLE = (
    (lambda g, losses, b: Fraction(g) <= 0, False),
    (lambda g, losses, b: Fraction(g) > _oracle_mean(losses, b), True),
    (lambda g, losses, b: True, False),
)
GRANT_TABLE = (
    (lambda l, led, b: led["granted"] - led["received"] >= led["cap"], (False, DenyReason.CAP_REACHED)),
    (lambda l, led, b: Fraction(l) == 0, (True, None)),
    (lambda l, led, b: Fraction(l) < _oracle_mean(led["gains"], b), (True, None)),
    (lambda l, led, b: True, (False, DenyReason.UTILITY_REFUSED)),
)


def _lookup(table, *args):
    return next(decision for pred, decision in table if pred(*args))


def test_criterion_2_decision_oracle(acceptance_log):
    t0 = time.perf_counter()
    cases = mismatches = 0
    histories = list(_histories())
    for cap, losses, gains in itertools.product((1, 2, 4), histories, histories):
        led = FavorLedger(cap, losses, gains)
        raw = {"cap": cap, "granted": len(losses), "received": len(gains), "gains": gains}
        for delta, boot in itertools.product(VALUES, (0.0, 0.5)):
            cases += 2
            mismatches += should_ask(led, delta, boot) != _lookup(ASK_TABLE, delta, losses, boot)
            mismatches += should_grant(led, delta, boot) != _lookup(GRANT_TABLE, delta, raw, boot)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 1.0
    acceptance_log(2, ok, f"{cases} decisions, {mismatches} mismatches, {elapsed:.2f} s")
    assert ok


# -- 3 ----------------------------------------------------------------------

def test_criterion_3_reciprocity_bound(asymmetric_runs, acceptance_log):
    violations, worst, slowest = 0, -math.inf, 0.0
    for seed, (res, elapsed) in asymmetric_runs.items():
        slowest = max(slowest, elapsed)
        # from the agents' own counters after every step
        for counters in res.counters:
            for (holder, opp), (granted, received) in counters.items():
                worst = max(worst, granted - received)
                violations += granted - received > CAP_S
        # and independently from the Grant messages in the transcript
        net = {"A": 0, "B": 0}
        by_step = {}
        for rec in res.transcript:
            if rec.kind == "FavorGrant":
                net[rec.sender] += 1
                net[rec.recipient] -= 1
                by_step[rec.snapshot] = dict(net)
        violations += sum(v > CAP_S for step in by_step.values() for v in step.values())
        assert len(res.counters) == res.config.snapshots
    ok = violations == 0 and slowest < 60.0
    acceptance_log(3, ok, f"{violations} violations over seeds 0-9, max net grants {worst}, "
                          f"slowest seed {slowest:.1f} s")
    assert ok


# -- 4 ----------------------------------------------------------------------

def test_criterion_4_heavier_operator_receives_more(asymmetric_runs, acceptance_log):
    diffs = [res.favors_received("A") - res.favors_received("B")
             for res, _ in asymmetric_runs.values()]
    wins = sum(d > 0 for d in diffs)
    ok = wins >= 9
    acceptance_log(4, ok, f"A received more in {wins}/10 seeds (A-B per seed: {diffs})")
    assert ok


# -- 5 ----------------------------------------------------------------------

def test_criterion_5_protocol_beats_orthogonal(asymmetric_runs, acceptance_log):
    ratios = []
    for res, _ in asymmetric_runs.values():
        ra = res.mean_utility(PROTOCOL, "A") / res.mean_utility(ORTHOGONAL, "A")
        rb = res.mean_utility(PROTOCOL, "B") / res.mean_utility(ORTHOGONAL, "B")
        ratios.append((round(ra, 3), round(rb, 3)))
    good = sum(ra >= 1.05 and rb >= 0.95 for ra, rb in ratios)
    ok = good >= 8
    acceptance_log(5, ok, f"{good}/10 seeds with A >= 1.05x and B >= 0.95x orthogonal "
                          f"(A, B ratios: {ratios})")
    assert ok


# -- 6 ----------------------------------------------------------------------

def test_criterion_6_symmetric_reciprocity(symmetric_runs, acceptance_log):
    ratios = []
    for res in symmetric_runs.values():
        ga, gb = res.favors_granted("A"), res.favors_granted("B")
        ratios.append(abs(ga - gb) / max(ga, gb, 1))
    good = sum(r <= 0.15 for r in ratios)
    ok = good >= 8
    acceptance_log(6, ok, f"{good}/10 seeds within 0.15 (max ratio {max(ratios):.4f})")
    assert ok


# -- 7 ----------------------------------------------------------------------

def test_criterion_7_radio_consistency(acceptance_log):
    rng = np.random.default_rng(7)
    env = EnvConfig(LoadParams({"A": {LoadState.HIGH: 12.0, LoadState.LOW: 4.0},
                                "B": {LoadState.HIGH: 6.0, LoadState.LOW: 2.0}}))
    plan = BandPlan({"A": {0}, "B": {1}}, set(range(2, 8)), SharingScenario.LIMITED_POOL)
    cases = bad = 0
    worst = 0.0
    while cases < 1000:
        snap = draw_snapshot(env, int(rng.integers(2**31)), int(rng.integers(1000)))
        if snap.n_users == 0:
            continue
        state = initial_allocation(plan)
        for c in sorted(plan.pool):
            pick = rng.integers(3)
            if pick:
                asker, grantor = ("A", "B") if pick == 1 else ("B", "A")
                (ft, _), = [x for x in candidate_favors(state, plan, asker, grantor) if x[1] == c]
                state = apply_favor(state, Favor(c, ft, c, asker, grantor, 0, 1, 1))
        u = int(rng.integers(snap.n_users))
        op = snap.user_operator[u]
        c = int(rng.choice(sorted(transmit_set(state, op))))
        report = measure_interference(op, state, snap)
        row = int(np.flatnonzero(report.users == u)[0])
        reported = float(report.linear_mw()[row, report.carriers.index(c)])
        term = interference_term_mw(u, c, state, snap)
        b = int(snap.serving[u])
        signal = 10 ** (snap.deployment.base_stations[b].tx_power_dbm / 10) * snap.gains[u, b]
        via_sinr = signal / sinr(u, c, state, snap)          # = I + N
        noise = env.radio.noise_mw
        err = max(abs(reported - term) / max(abs(term), 1e-300),
                  abs((reported + noise) - via_sinr) / via_sinr)
        if term == 0.0:
            err = 0.0 if reported == 0.0 else math.inf
        worst = max(worst, err)
        bad += err > 1e-9
        cases += 1
    ok = bad == 0
    acceptance_log(7, ok, f"{cases} cases, {bad} above 1e-9, worst relative error {worst:.2e}")
    assert ok


# -- 8 and 9 ----------------------------------------------------------------

def test_criteria_8_and_9_determinism_and_runtime(tmp_path, acceptance_log):
    t0 = time.perf_counter()
    assert main(["run", "--seed", "0", "--out", str(tmp_path / "a")]) == 0
    elapsed = time.perf_counter() - t0
    assert main(["run", "--seed", "0", "--out", str(tmp_path / "b")]) == 0
    names = ("results.csv", "cdf.csv", "transcript.log")
    same = [n for n in names if (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()]
    ok8 = len(same) == len(names)
    ok9 = elapsed <= 60.0
    acceptance_log(8, ok8, f"byte-identical: {', '.join(same) or 'none'}")
    acceptance_log(9, ok9, f"default 1000-snapshot horizon, both schemes, files written: "
                           f"{elapsed:.1f} s")
    assert ok8 and ok9
