#!/usr/bin/env python3
"""Sweep activation slopes and print the stabilization table.

Shows the flat/slanted split directly: the a = 0 column stabilizes down the
truncation ladder while every nonzero slope pins at order one.
"""

import sys

from plaplab.experiments import SlantedConfig, run_slanted


def main() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else None
    cfg = SlantedConfig(a_values=(0.0, 0.02, 0.05, 0.1))
    report = run_slanted(cfg, out_dir=out)
    stab = report.metrics["stabilization"]
    ks = report.metrics["k_ladder"]
    header = "k".rjust(10) + "".join(f"  a={a:>5}" for a in stab)
    print(header)
    for j, k in enumerate(ks):
        print(f"{k:10.0f}" + "".join(f"  {stab[a][j]:7.4f}" for a in stab))
    print(f"barrier ratio min: {report.metrics['barrier_ratio_min']:.3f}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
