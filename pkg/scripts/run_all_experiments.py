#!/usr/bin/env python3
"""Run every experiment at its defaults and write artifacts under runs/.

Equivalent to invoking each CLI subcommand in sequence; handy for producing
a complete artifact set (reports, tables, field snapshots) in one go.
"""

import sys
import time

from plaplab.experiments import EXPERIMENTS, run_by_name


def main() -> int:
    out_root = sys.argv[1] if len(sys.argv) > 1 else "runs"
    failures = []
    for name in EXPERIMENTS:
        started = time.monotonic()
        report = run_by_name(name, out_dir=out_root)
        status = "pass" if report.passed else "FAIL"
        print(f"{name:12s} {status}  ({time.monotonic() - started:6.1f}s)")
        if not report.passed:
            failures.append(name)
    if failures:
        print("failed:", ", ".join(failures))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
