import numpy as np
import pytest
from hypothesis import settings

from favorshare.radio import BaseStation, Deployment, LoadState, Placement, Snapshot

settings.register_profile("ci", max_examples=200, deadline=None)
settings.register_profile("fast", max_examples=20, deadline=None)
settings.load_profile("ci")


def build_snapshot(bs, users, gains=None, tx_power_dbm=24.0, index=0, load=None):
    """Hand-made snapshot.

    ``bs``: list of (operator, x); ``users``: list of (operator, x). Gains
    default to a 38.5 + 30 log10(d) path loss without shadowing; each user is
    served by the strongest base station of its operator.
    """
    stations = tuple(BaseStation(op, float(x), 25.0, tx_power_dbm) for op, x in bs)
    ops = sorted({op for op, _ in bs})
    dep = Deployment(100.0, 50.0, stations, Placement.INTERLEAVED,
                     {op: ((0.0, 100.0),) for op in ops})
    pos = np.array([(x, 25.0) for _, x in users], dtype=float).reshape(-1, 2)
    if gains is None:
        d = np.abs(pos[:, None, 0] - np.array([x for _, x in bs], dtype=float)[None, :])
        gains = 10 ** (-(38.5 + 30 * np.log10(np.maximum(d, 1.0))) / 10)
    gains = np.asarray(gains, dtype=float).reshape(len(users), len(bs))
    user_ops = tuple(op for op, _ in users)
    serving = np.array([max((b for b, (bop, _) in enumerate(bs) if bop == op),
                            key=lambda b: gains[u, b]) for u, op in enumerate(user_ops)],
                       dtype=int)
    load = load or {op: LoadState.HIGH for op in ops}
    return Snapshot(dep, index, load, user_ops, pos, gains, serving)


@pytest.fixture
def snapshot_factory():
    return build_snapshot


# -- acceptance reporting -----------------------------------------------------

_CRITERIA = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Record ``(number, passed, detail)`` for the end-of-run criterion table."""
    def record(number, passed, detail):
        _CRITERIA[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
