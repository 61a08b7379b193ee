#!/usr/bin/env python3
"""Sweep the viewpoint objective weights and viewing distance on one scenario.

Prints a TSV table of tracking uptime and mean objective terms per grid
point, e.g.:

    python3 scripts/weight_sweep.py fig5a_angled --w2 0,50,100 --d 0.25,0.3,0.35
"""

import argparse
from pathlib import Path

from demosim.cli import sweep
from demosim.scenarios import resolve_scenario


def grid(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenario", nargs="?", default="fig5a_angled")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--w1", default="100")
    parser.add_argument("--w2", default="0,100")
    parser.add_argument("--w3", default="2")
    parser.add_argument("--w4", default="0.5")
    parser.add_argument("--d", default="0.3")
    parser.add_argument("--out", type=Path, default=Path("out/sweep"))
    args = parser.parse_args()

    scenario = resolve_scenario(args.scenario)
    table = sweep(
        scenario, args.seed,
        grid(args.w1), grid(args.w2), grid(args.w3), grid(args.w4), grid(args.d),
        out_dir=args.out,
    )
    cols = list(table[0].keys())
    print("\t".join(cols))
    for row in table:
        print("\t".join(f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c]) for c in cols))


if __name__ == "__main__":
    main()
