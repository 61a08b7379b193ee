"""Run metrics computed purely from a trace (header + rows).

Because the summary is a function of the log alone, replaying a trace
reproduces the summary written at run time exactly.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from .se3 import Pose, pose_error


def _estimate_error(row: dict[str, Any]) -> tuple[float, float] | None:
    est = row.get("tool_estimate")
    if not est or not est.get("tracking"):
        return None
    true = row["tool_true"]
    return pose_error(
        Pose(np.array(true["position"]), np.array(true["quat"])),
        Pose(np.array(est["position"]), np.array(est["quat"])),
    )


def _camera_violations(header: dict[str, Any], rows: list[dict[str, Any]]) -> int:
    opt = header["optimizer"]
    lo = np.array(opt["pos_lo"] + [opt["theta_x_lo"], opt["theta_y_lo"]])
    hi = np.array(opt["pos_hi"] + [opt["theta_x_hi"], opt["theta_y_hi"]])
    tick = header["tick"]
    tol = 1e-9
    count = 0
    prev = None
    for row in rows:
        cam = row["camera"]
        x = np.array(cam["position"] + [cam["theta_x"], cam["theta_y"]])
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            count += 1
        if prev is not None:
            lin = float(np.linalg.norm(x[:3] - prev[:3]))
            ang = float(np.linalg.norm(x[3:] - prev[3:]))
            if lin > opt["v_lin_max"] * tick + tol or ang > opt["v_ang_max"] * tick + tol:
                count += 1
        prev = x
    return count


def _goal_results(header: dict[str, Any], rows: list[dict[str, Any]],
                  stats: dict[str, Any]) -> dict[str, bool]:
    modes = [row["mode"] for row in rows]
    force_limit = header["teleop"]["force_limit"]
    results: dict[str, bool] = {}
    for goal in header.get("goals", []):
        if goal == "high_uptime":
            ok = stats["tracking_uptime"] > 0.95
        elif goal == "never_tracked":
            ok = stats["tracking_uptime"] == 0.0
        elif goal == "beeped":
            ok = stats["beep_count"] > 0
        elif goal == "entered_lost":
            ok = "natural_lost" in modes
        elif goal == "tracked_during_natural":
            ok = "natural_tracking" in modes
        elif goal == "all_modes_used":
            ok = (
                "teleoperation" in modes
                and "kinesthetic" in modes
                and any(m.startswith("natural") for m in modes)
            )
        elif goal == "recovered_then_lost":
            # tracking -> lost -> tracking -> lost somewhere in the trace
            pattern = ["natural_tracking", "natural_lost", "natural_tracking", "natural_lost"]
            idx = 0
            for m in modes:
                if m == pattern[idx]:
                    idx += 1
                    if idx == len(pattern):
                        break
            ok = idx == len(pattern)
        elif goal == "teleop_force_exit":
            # the exceeding force is observed on the tick the exit lands on
            ok = any(
                a == "teleoperation"
                and b == "idle"
                and float(np.linalg.norm(rows[i + 1]["forces"]["robot_force"])) > force_limit
                for i, (a, b) in enumerate(zip(modes, modes[1:]))
            )
        else:
            raise ValueError(f"unknown goal {goal!r}")
        results[goal] = bool(ok)
    return results


def summarize(header: dict[str, Any], rows: list[dict[str, Any]]) -> dict[str, Any]:
    detached = [row for row in rows if not row["attached"]]
    tracking_ticks = [
        row for row in detached
        if row.get("tool_estimate") and row["tool_estimate"]["tracking"]
    ]
    uptime = len(tracking_ticks) / len(detached) if detached else 0.0

    errors = [e for e in (_estimate_error(row) for row in rows) if e is not None]
    pos_errs = [e[0] for e in errors]
    rot_errs = [e[1] for e in errors]

    transitions: dict[str, int] = {}
    prev_mode = None
    for row in rows:
        if row["mode"] != prev_mode:
            transitions[row["mode"]] = transitions.get(row["mode"], 0) + 1
            prev_mode = row["mode"]

    beep_count = 0
    prev_beep = False
    for row in rows:
        beep = row["signals"]["beep"]
        if beep and not prev_beep:
            beep_count += 1
        prev_beep = beep

    phi_rows = [row["objectives"] for row in rows if row["objectives"] is not None]
    mean_phi = {
        key: (float(np.mean([p[key] for p in phi_rows])) if phi_rows else None)
        for key in ("phi1", "phi2", "phi3", "phi4", "total")
    }

    stats: dict[str, Any] = {
        "scenario": header["scenario"],
        "seed": header["seed"],
        "ticks": len(rows),
        "tracking_uptime": uptime,
        "pos_error_mean": float(np.mean(pos_errs)) if pos_errs else None,
        "pos_error_max": float(np.max(pos_errs)) if pos_errs else None,
        "rot_error_mean": float(np.mean(rot_errs)) if rot_errs else None,
        "rot_error_max": float(np.max(rot_errs)) if rot_errs else None,
        "constraint_violations": _camera_violations(header, rows),
        "mode_transitions": transitions,
        "beep_count": beep_count,
        "mean_objectives": mean_phi,
    }
    stats["goals"] = _goal_results(header, rows, stats)
    stats["completed"] = all(stats["goals"].values()) if stats["goals"] else True
    return stats
