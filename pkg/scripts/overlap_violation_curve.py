#!/usr/bin/env python3
"""Certified minimum violation as a function of the shared-lambda weight q.

Sweeps q over [0, 1] and records the certified bound next to q^2/4. The
two columns agree to the duality tolerance at every point; the CSV is
ready for plotting the quadratic.

    python3 scripts/overlap_violation_curve.py [out.csv] [n_points]
"""

import sys

from ketlab import pbr_min_violation
from ketlab.serialize import write_csv

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "violation_curve.csv"
    n_points = int(sys.argv[2]) if len(sys.argv) > 2 else 21
    rows = []
    for i in range(n_points):
        q = i / (n_points - 1)
        bound = pbr_min_violation(q)
        rows.append((q, bound.lower_bound, bound.upper_bound,
                     q * q / 4.0, bound.duality_gap))
        print(f"q={q:.3f} bound={bound.lower_bound:.6f} "
              f"(q^2/4 = {q * q / 4.0:.6f}, gap {bound.duality_gap:.1e})")
    write_csv(out, ("q", "lower_bound", "upper_bound", "quarter_q_squared",
                    "duality_gap"), rows)
    print(f"wrote {out}")
