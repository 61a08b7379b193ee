#!/usr/bin/env python3
"""Run every built-in scenario and print a one-line summary per run.

Traces and summary documents land under --out (default out/).
"""

import argparse
from pathlib import Path

from demosim.cli import run_scenario
from demosim.scenarios import builtin_scenarios


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("out"))
    args = parser.parse_args()

    print(f"{'scenario':<24} {'uptime':>7} {'pos_err_mean':>13} {'beeps':>6} {'violations':>11} {'completed':>10}")
    for sc in builtin_scenarios():
        summary = run_scenario(sc, args.seed, args.out / f"{sc.name}_seed{args.seed}.jsonl")
        pos = summary["pos_error_mean"]
        print(
            f"{sc.name:<24} {summary['tracking_uptime']:>7.3f} "
            f"{(f'{pos * 1000:.2f} mm' if pos is not None else '-'):>13} "
            f"{summary['beep_count']:>6} {summary['constraint_violations']:>11} "
            f"{str(summary['completed']):>10}"
        )


if __name__ == "__main__":
    main()
