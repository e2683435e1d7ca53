"""Random locally purified MPDOs: whenever E² has a unique top eigenvalue,
check whether E¹ does too. Prints a JSON report with every counterexample.
"""

import argparse
import json
import time

from mspt.mpdo import uniqueness_scan


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    scan = uniqueness_scan(args.n, seed=args.seed)
    report = scan.to_json()
    report["seconds"] = round(time.perf_counter() - t0, 2)
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
