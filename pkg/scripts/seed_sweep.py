"""Run a horizon per seed and tabulate favors and utility against the baseline.

    python scripts/seed_sweep.py --seeds 10
    python scripts/seed_sweep.py --symmetric --seeds 10 --workers 4
    python scripts/seed_sweep.py --config my.ini --csv sweep.csv
"""

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor

from favorshare.config import default_config, parse_config, symmetric_config, with_overrides
from favorshare.sim import ORTHOGONAL, PROTOCOL, run_horizon

COLUMNS = ("seed", "received_A", "received_B", "granted_A", "granted_B",
           "utility_ratio_A", "utility_ratio_B")


def one_seed(args):
    base, seed, snapshots = args
    changes = {"seed": seed}
    if snapshots is not None:
        changes["snapshots"] = snapshots
    res = run_horizon(with_overrides(base, **changes))
    a, b = res.config.operators
    row = {"seed": seed,
           "received_A": res.favors_received(a), "received_B": res.favors_received(b),
           "granted_A": res.favors_granted(a), "granted_B": res.favors_granted(b)}
    for key, op in (("utility_ratio_A", a), ("utility_ratio_B", b)):
        base_u = res.mean_utility(ORTHOGONAL, op)
        row[key] = res.mean_utility(PROTOCOL, op) / base_u if base_u else float("nan")
    return row


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config")
    p.add_argument("--symmetric", action="store_true", help="both operators at the lighter load")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="also write the table to this file")
    args = p.parse_args(argv)

    if args.config:
        base = parse_config(args.config)
    else:
        base = symmetric_config() if args.symmetric else default_config()
    jobs = [(base, s, args.snapshots) for s in range(args.seeds)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            rows = list(ex.map(one_seed, jobs))
    else:
        rows = [one_seed(j) for j in jobs]

    w = csv.DictWriter(sys.stdout, COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            out = csv.DictWriter(fh, COLUMNS, lineterminator="\n")
            out.writeheader()
            out.writerows(rows)

    n = len(rows)
    more = sum(r["received_A"] > r["received_B"] for r in rows)
    qos = sum(r["utility_ratio_A"] >= 1.05 and r["utility_ratio_B"] >= 0.95 for r in rows)
    bal = sum(abs(r["granted_A"] - r["granted_B"]) / max(r["granted_A"], r["granted_B"], 1) <= 0.15
              for r in rows)
    print(f"# A received more favors: {more}/{n}; "
          f"A >= 1.05x and B >= 0.95x baseline: {qos}/{n}; grant imbalance <= 0.15: {bal}/{n}")


if __name__ == "__main__":
    main()
