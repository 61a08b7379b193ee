"""Command-line entry point: run, replay, sweep, serve, list-scenarios.

Exit codes: 0 success, 2 validation/parse error, 3 runtime invariant
violation.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from . import metrics, trace
from .scenarios import ScenarioError, builtin_scenarios, resolve_scenario
from .viewpoint import OptimizerConfig
from .world import Scenario, Simulation

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INVARIANT = 3


class InvariantViolation(RuntimeError):
    def __init__(self, tick_time: float, message: str):
        super().__init__(f"invariant violated at t={tick_time}: {message}")
        self.tick_time = tick_time


def trace_header(scenario: Scenario, seed: int) -> dict[str, Any]:
    opt = scenario.optimizer
    return {
        "scenario": scenario.name,
        "seed": seed,
        "tick": scenario.tick,
        "duration": scenario.duration,
        "goals": scenario.goals,
        "optimizer": {
            "pos_lo": opt.pos_lo.tolist(),
            "pos_hi": opt.pos_hi.tolist(),
            "theta_x_lo": opt.theta_x_lo,
            "theta_x_hi": opt.theta_x_hi,
            "theta_y_lo": opt.theta_y_lo,
            "theta_y_hi": opt.theta_y_hi,
            "v_lin_max": opt.v_lin_max,
            "v_ang_max": opt.v_ang_max,
        },
        "teleop": {"force_limit": scenario.teleop.force_limit},
    }


def _check_tick_invariants(header: dict[str, Any], prev: dict | None, row: dict) -> None:
    if metrics._camera_violations(header, [row] if prev is None else [prev, row]) > 0:
        raise InvariantViolation(row["time"], "camera bound or velocity cap violated")


def run_scenario(
    scenario: Scenario, seed: int, out_path: str | Path
) -> dict[str, Any]:
    """Execute the closed loop, write the JSONL trace and summary document."""
    sim = Simulation(scenario, seed=seed)
    header = trace_header(scenario, seed)
    rows: list[dict[str, Any]] = []
    prev = None
    n_ticks = int(round(scenario.duration / scenario.tick))
    try:
        for _ in range(n_ticks):
            row = sim.step()
            _check_tick_invariants(header, prev, row)
            rows.append(row)
            prev = row
    finally:
        trace.write_trace(out_path, header, rows)
    summary = metrics.summarize(header, rows)
    summary_path = summary_file(out_path)
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return summary


def summary_file(out_path: str | Path) -> Path:
    return Path(str(out_path) + ".summary.json")


def replay(log_path: str | Path) -> dict[str, Any]:
    header, rows = trace.read_trace(log_path)
    return metrics.summarize(header, rows)


def _cmd_run(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.tick is not None:
        scenario.tick = args.tick
    if args.duration is not None:
        scenario.duration = args.duration
    out = args.out or f"out/{scenario.name}_seed{args.seed}.jsonl"
    try:
        summary = run_scenario(scenario, args.seed, out)
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    print(json.dumps(summary, sort_keys=True, indent=2))
    return EXIT_OK


def _cmd_replay(args) -> int:
    try:
        summary = replay(args.log)
    except (trace.TraceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    spath = summary_file(args.log)
    if spath.exists():
        on_disk = json.loads(spath.read_text())
        if on_disk != summary:
            print("error: replayed summary differs from the one on disk", file=sys.stderr)
            return EXIT_INVARIANT
    else:
        spath.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True, indent=2))
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def sweep(
    scenario: Scenario,
    seed: int,
    w1s, w2s, w3s, w4s, ds,
    out_dir: str | Path = "out/sweep",
) -> list[dict[str, Any]]:
    """One run per grid point over (w1..w4, d); returns the table rows."""
    table = []
    for w1, w2, w3, w4, d in itertools.product(w1s, w2s, w3s, w4s, ds):
        opt = replace(scenario.optimizer, w1=w1, w2=w2, w3=w3, w4=w4, d=d)
        sc = replace(scenario, optimizer=opt)
        out = Path(out_dir) / f"{sc.name}_w{w1}_{w2}_{w3}_{w4}_d{d}_seed{seed}.jsonl"
        summary = run_scenario(sc, seed, out)
        table.append(
            {
                "w1": w1, "w2": w2, "w3": w3, "w4": w4, "d": d,
                "tracking_uptime": summary["tracking_uptime"],
                "mean_phi1": summary["mean_objectives"]["phi1"],
                "mean_phi2": summary["mean_objectives"]["phi2"],
                "mean_phi3": summary["mean_objectives"]["phi3"],
                "mean_phi4": summary["mean_objectives"]["phi4"],
                "constraint_violations": summary["constraint_violations"],
            }
        )
    return table


def _cmd_sweep(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.duration is not None:
        scenario.duration = args.duration
    table = sweep(
        scenario,
        args.seed,
        _parse_grid(args.w1), _parse_grid(args.w2),
        _parse_grid(args.w3), _parse_grid(args.w4), _parse_grid(args.d),
        out_dir=args.out or "out/sweep",
    )
    cols = list(table[0].keys())
    print("\t".join(cols))
    for row in table:
        print("\t".join(str(row[c]) for c in cols))
    return EXIT_OK


def _cmd_list(args) -> int:
    for sc in builtin_scenarios():
        print(f"{sc.name}\tduration={sc.duration}s\tgoals={','.join(sc.goals)}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .server import serve  # imported lazily: pulls in websockets

    try:
        scenario = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    scenario.interactive = True
    serve(scenario, args.port, seed=args.seed)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="demosim")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headless")
    p_run.add_argument("scenario", help="built-in name or TOML path")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", default=None, help="JSONL trace path")
    p_run.add_argument("--tick", type=float, default=None)
    p_run.add_argument("--duration", type=float, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_replay = sub.add_parser("replay", help="recompute metrics from a trace")
    p_replay.add_argument("log")
    p_replay.set_defaults(func=_cmd_replay)

    p_sweep = sub.add_parser("sweep", help="grid sweep over objective weights")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--w1", default="100")
    p_sweep.add_argument("--w2", default="100")
    p_sweep.add_argument("--w3", default="2")
    p_sweep.add_argument("--w4", default="0.5")
    p_sweep.add_argument("--d", default="0.3")
    p_sweep.add_argument("--out", default=None, help="directory for per-point traces")
    p_sweep.add_argument("--duration", type=float, default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_serve = sub.add_parser("serve", help="interactive session over websocket")
    p_serve.add_argument("scenario")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.set_defaults(func=_cmd_serve)

    p_list = sub.add_parser("list-scenarios", help="print built-in scenarios")
    p_list.set_defaults(func=_cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
