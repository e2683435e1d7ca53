"""Dissipative gap and steady-state diagnostics for every Lindblad family."""

import argparse

from mspt.io import write_csv
from mspt.lindblad import FAMILIES, gap_ssb_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--gamma", type=float, default=1.0)
    args = ap.parse_args(argv)

    rows = []
    for name in FAMILIES:
        rep = gap_ssb_experiment(name, args.L, args.gamma)
        for r in rep.rows:
            rows.append((name, r.L, r.gap, r.steady_dim, r.C1, r.C2, r.D1, r.D2, r.D3, r.pattern))
        print(f"# {name}: predicate {rep.predicate} ({rep.note})")
    print(write_csv(["family", "L", "gap", "steady_dim", "C1", "C2", "D1", "D2", "D3", "pattern"], rows), end="")


if __name__ == "__main__":
    main()
