"""Transfer-matrix spectrum of the cluster MPDO along the dephasing line.

Writes a CSV with the top E² and E¹ magnitudes per p and marks where the E²
top eigenvalue becomes degenerate.
"""

import argparse
import sys

import numpy as np

from mspt import fixtures as F
from mspt.channels import apply_gate_to_mpdo, dephasing
from mspt.io import write_csv
from mspt.mpdo import spectrum_E1, spectrum_E2


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    rows = []
    for p in np.round(np.arange(0, 0.5 + 1e-9, args.step), 12):
        B = apply_gate_to_mpdo(F.cluster_mpdo(), dephasing(float(p)))
        s2, s1 = spectrum_E2(B), spectrum_E1(B)
        mags = list(np.abs(s2.eigenvalues[: args.k])) + [0.0] * max(0, args.k - len(s2.eigenvalues))
        rows.append((float(p), *mags, abs(s1.top), s2.degeneracy_of_top, s1.degeneracy_of_top))
    header = ["p"] + [f"|E2_{i}|" for i in range(args.k)] + ["|E1_0|", "E2_top_degeneracy", "E1_top_degeneracy"]
    text = write_csv(header, rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
