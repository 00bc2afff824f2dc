"""Carriers held and utility per load-state pair over one horizon.

Shows how the protocol moves spectrum towards whichever operator is
currently loaded, and how each operator fares against the static split.

    python scripts/load_state_profile.py --seed 0 --out profile.csv
"""

import argparse
import csv
import sys
from collections import defaultdict

import numpy as np

from favorshare.config import default_config, parse_config, with_overrides
from favorshare.sim import ORTHOGONAL, PROTOCOL, run_horizon


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--out", help="CSV file (default: stdout)")
    args = p.parse_args(argv)

    cfg = parse_config(args.config) if args.config else default_config()
    changes = {"seed": args.seed}
    if args.snapshots is not None:
        changes["snapshots"] = args.snapshots
    res = run_horizon(with_overrides(cfg, **changes))
    ops = res.config.operators

    groups = defaultdict(list)
    for t in range(res.config.warmup, len(res.digests)):
        key = tuple(res.load_states[t][op].value for op in ops)
        groups[key].append(t)

    cols = ["load_" + op for op in ops] + ["snapshots"]
    for op in ops:
        cols += [f"carriers_{op}", f"utility_{op}_protocol", f"utility_{op}_orthogonal"]
    rows = []
    for key in sorted(groups):
        ts = groups[key]
        row = dict(zip(cols, [*key, len(ts)]))
        for op in ops:
            row[f"carriers_{op}"] = float(np.mean([res.carriers_held[t][op] for t in ts]))
            for scheme in (PROTOCOL, ORTHOGONAL):
                row[f"utility_{op}_{scheme}"] = float(
                    np.mean([res.reports[scheme][t][op].utility for t in ts]))
        rows.append(row)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()


if __name__ == "__main__":
    main()
