#!/usr/bin/env python3
"""Mesh-refinement study against the self-similar source solution.

Sweeps a finer ladder than the experiment default and prints the error
table; pass an output directory to keep the report artifacts.
"""

import sys

from plaplab.experiments import BarenblattStudyConfig, run_barenblatt_convergence


def main() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else None
    cfg = BarenblattStudyConfig(resolutions=(101, 201, 401, 801, 1601))
    report = run_barenblatt_convergence(cfg, out_dir=out)
    print(f"{'h':>10} {'dt':>10} {'rel L1':>12} {'rel Linf':>12} {'order':>7}")
    rows = report.tables["convergence"]
    for row in rows:
        order = f"{row['order_l1']:.3f}" if row["order_l1"] is not None else "-"
        print(f"{row['h']:10.5f} {row['dt']:10.5f} {row['err_l1']:12.3e} "
              f"{row['err_linf']:12.3e} {order:>7}")
    print(f"fitted order (L1): {report.metrics['order_l1_fit']:.3f}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
