"""Built-in scenario library and the TOML scenario-file loader.

The six built-in scenarios reproduce the qualitative tracking behaviors
of the prototype study: a well-angled tool that tracks nearly all the
time, an out-of-view tool, a top-face reorientation that defeats the
markers, a present-then-reorient pattern with a second loss, and the two
scripted bench tasks (rolling, press-fitting) that walk through all three
demonstration modes.

Scenario files are TOML; every numeric field is SI (meters, radians,
seconds, newtons).  See scenarios/README.md for the schema.
"""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from pathlib import Path
from typing import Any

import numpy as np

from .modes import TeleopConfig
from .se3 import Pose, quat_from_axis_angle, quat_multiply
from .tracker import MarkerLayout, TrackerConfig
from .viewpoint import OptimizerConfig
from .world import ContactConfig, Scenario, VisibilityConfig, default_marker_layout

# tool orientations used by the scripted trajectories: the tool z-axis is
# the "front" (marker-rich) direction, so facing the camera below means
# pointing the tool z straight down
FACE_DOWN = np.array([0.0, 1.0, 0.0, 0.0])  # 180 deg about x: z -> -z
FACE_UP = np.array([1.0, 0.0, 0.0, 0.0])

HOVER = np.array([0.0, -0.38, 0.66])


def _tilted_down(axis: np.ndarray, angle: float) -> np.ndarray:
    return quat_multiply(quat_from_axis_angle(axis, angle), FACE_DOWN)


def fig5a_angled() -> Scenario:
    """Tool kept angled toward the camera; tracking should rarely drop."""
    wp = [
        (0.0, Pose(HOVER, FACE_DOWN)),
        (5.0, Pose(HOVER + [0.10, 0.02, 0.02], _tilted_down(np.array([0, 1, 0]), 0.25))),
        (10.0, Pose(HOVER + [-0.10, -0.02, -0.02], _tilted_down(np.array([1, 0, 0]), -0.2))),
        (15.0, Pose(HOVER + [0.0, 0.04, 0.04], _tilted_down(np.array([0, 1, 0]), -0.25))),
        (20.0, Pose(HOVER, FACE_DOWN)),
    ]
    return Scenario(
        name="fig5a_angled",
        duration=20.0,
        waypoints=wp,
        events=[{"t": 0.1, "kind": "pull_pin"}],
        visibility=VisibilityConfig(dropout_prob=0.02),
        goals=["high_uptime"],
    )


def fig5b_endeffector() -> Scenario:
    """Only the end effector in view: the tool sits beyond marker range."""
    wp = [(0.0, Pose(np.array([1.4, -0.3, 0.5]), FACE_DOWN))]
    wp.append((10.0, wp[0][1]))
    return Scenario(
        name="fig5b_endeffector",
        duration=10.0,
        waypoints=wp,
        events=[{"t": 0.1, "kind": "pull_pin"}],
        goals=["never_tracked", "beeped"],
    )


def fig5c_topface() -> Scenario:
    """Untagged top face turned toward the camera midway; tracking is lost."""
    wp = [
        (0.0, Pose(HOVER, FACE_DOWN)),
        (6.0, Pose(HOVER, FACE_DOWN)),
        (6.4, Pose(HOVER + [0.0, 0.0, 0.02], FACE_UP)),
        (10.0, Pose(HOVER + [0.0, 0.0, 0.02], FACE_UP)),
    ]
    return Scenario(
        name="fig5c_topface",
        duration=10.0,
        waypoints=wp,
        events=[{"t": 0.1, "kind": "pull_pin"}],
        goals=["entered_lost"],
    )


def fig5d_present_reorient() -> Scenario:
    """Recovery by presenting the tool, then a second loss on reorientation."""
    wp = [
        (0.0, Pose(HOVER, FACE_DOWN)),
        (4.0, Pose(HOVER, FACE_DOWN)),
        (4.4, Pose(HOVER, FACE_UP)),
        (7.0, Pose(HOVER, FACE_UP)),
        (7.4, Pose(HOVER, FACE_DOWN)),
        (10.0, Pose(HOVER, FACE_DOWN)),
        (10.4, Pose(HOVER, FACE_UP)),
        (14.0, Pose(HOVER, FACE_UP)),
    ]
    return Scenario(
        name="fig5d_present_reorient",
        duration=14.0,
        waypoints=wp,
        events=[{"t": 0.1, "kind": "pull_pin"}],
        goals=["entered_lost", "recovered_then_lost"],
    )


def rolling() -> Scenario:
    """Rolling against a contoured surface: teleop, kinesthetic, then natural."""
    start = Pose(np.array([0.05, -0.35, 0.01]), FACE_DOWN)
    wp = [
        (0.0, start),
        # kinesthetic phase: the hand rolls the tool along x in light contact
        (6.0, Pose(np.array([0.05, -0.35, 0.004]), FACE_DOWN)),
        (8.0, Pose(np.array([-0.05, -0.35, 0.004]), FACE_DOWN)),
        (10.0, Pose(np.array([0.05, -0.35, 0.01]), FACE_DOWN)),
        (12.0, Pose(np.array([0.05, -0.35, 0.05]), FACE_DOWN)),
        # natural phase: lift to the hover zone and keep demonstrating
        (14.0, Pose(HOVER, FACE_DOWN)),
        (18.0, Pose(HOVER + [0.08, 0.0, 0.0], _tilted_down(np.array([0, 1, 0]), 0.2))),
        (22.0, Pose(HOVER + [-0.08, 0.0, 0.0], _tilted_down(np.array([0, 1, 0]), -0.2))),
        (24.0, Pose(HOVER, FACE_DOWN)),
    ]
    events = [
        {"t": 1.0, "kind": "press_device"},
        {"t": 1.0, "kind": "device_twist", "value": [0.0, 0.4, -0.3, 0.0, 0.0, 0.0]},
        {"t": 3.0, "kind": "device_twist", "value": [0.0, -0.4, -0.3, 0.0, 0.0, 0.0]},
        {"t": 5.0, "kind": "press_device", "value": False},
        {"t": 6.0, "kind": "pull", "value": 20.0},
        {"t": 10.0, "kind": "pull", "value": 0.0},
        {"t": 12.0, "kind": "pull_pin"},
    ]
    return Scenario(
        name="rolling",
        duration=24.0,
        waypoints=wp,
        events=events,
        contact=ContactConfig(plane_z=0.0, stiffness=3000.0),
        goals=["all_modes_used", "tracked_during_natural"],
    )


def press_fit() -> Scenario:
    """Press-fitting: a teleop press past the force limit, a kinesthetic
    fitting, then a natural demonstration with the detached tool."""
    start = Pose(np.array([0.0, -0.35, 0.01]), FACE_DOWN)
    wp = [
        (0.0, start),
        # kinesthetic phase: second fitting at the far slot
        (4.0, Pose(np.array([0.0, -0.35, 0.01]), FACE_DOWN)),
        (6.0, Pose(np.array([0.12, -0.35, 0.03]), FACE_DOWN)),
        (7.0, Pose(np.array([0.12, -0.35, -0.0005]), FACE_DOWN)),
        (8.0, Pose(np.array([0.12, -0.35, 0.04]), FACE_DOWN)),
        (11.0, Pose(np.array([0.12, -0.35, 0.05]), FACE_DOWN)),
        # natural phase
        (14.0, Pose(HOVER, FACE_DOWN)),
        (18.0, Pose(HOVER + [0.06, 0.02, 0.0], _tilted_down(np.array([0, 1, 0]), 0.15))),
        (22.0, Pose(HOVER + [-0.06, -0.02, 0.0], _tilted_down(np.array([1, 0, 0]), -0.15))),
        (26.0, Pose(HOVER, FACE_DOWN)),
    ]
    events = [
        {"t": 0.5, "kind": "press_device"},
        {"t": 0.5, "kind": "device_twist", "value": [0.0, 0.0, -1.5, 0.0, 0.0, 0.0]},
        {"t": 3.0, "kind": "press_device", "value": False},
        # a hard pull: the fitting is still seated, so the axial reading has
        # to overcome the seated contact before the pull heuristic fires
        {"t": 4.0, "kind": "pull", "value": 45.0},
        {"t": 9.0, "kind": "pull", "value": 0.0},
        {"t": 11.0, "kind": "pull_pin"},
    ]
    return Scenario(
        name="press_fit",
        duration=26.0,
        waypoints=wp,
        events=events,
        teleop=TeleopConfig(admittance_compliance=0.0008),
        contact=ContactConfig(plane_z=0.0, stiffness=20000.0),
        goals=["all_modes_used", "tracked_during_natural", "teleop_force_exit"],
    )


def builtin_scenarios() -> list[Scenario]:
    return [
        fig5a_angled(),
        fig5b_endeffector(),
        fig5c_topface(),
        fig5d_present_reorient(),
        rolling(),
        press_fit(),
    ]


def get_scenario(name: str) -> Scenario:
    for sc in builtin_scenarios():
        if sc.name == name:
            return sc
    raise KeyError(f"no built-in scenario named {name!r}")


# -- TOML loading ---------------------------------------------------------

class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


def _pose_from_table(tab: dict[str, Any], where: str) -> Pose:
    try:
        return Pose(np.asarray(tab["position"], dtype=float), np.asarray(tab["quat"], dtype=float))
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"{where}: bad pose ({exc})") from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc

    try:
        meta = raw["scenario"]
        name = meta["name"]
        duration = float(meta["duration"])
    except KeyError as exc:
        raise ScenarioError(f"{path}: missing required field [scenario].{exc}") from exc

    waypoints = [
        (float(w["t"]), _pose_from_table(w, f"waypoints[{i}]"))
        for i, w in enumerate(raw.get("waypoints", []))
    ]
    events = [dict(e) for e in raw.get("events", [])]
    for i, ev in enumerate(events):
        if "t" not in ev or "kind" not in ev:
            raise ScenarioError(f"{path}: events[{i}] needs 't' and 'kind'")

    layout = None
    if "markers" in raw:
        entries = tuple(
            (int(m["id"]), _pose_from_table(m, f"markers[{i}]"), float(m.get("edge", 0.03)))
            for i, m in enumerate(raw["markers"])
        )
        layout = MarkerLayout(entries)

    def build(cls, key):
        try:
            return cls(**raw[key]) if key in raw else cls()
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: bad [{key}] table ({exc})") from exc

    try:
        return Scenario(
            name=name,
            duration=duration,
            tick=float(meta.get("tick", 0.02)),
            seed=int(meta.get("seed", 0)),
            interactive=bool(meta.get("interactive", False)),
            goals=list(meta.get("goals", [])),
            waypoints=waypoints,
            events=events,
            marker_layout=layout,
            optimizer=build(OptimizerConfig, "optimizer"),
            teleop=build(TeleopConfig, "teleop"),
            visibility=build(VisibilityConfig, "visibility"),
            tracker=build(TrackerConfig, "tracker"),
            contact=build(ContactConfig, "contact"),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def resolve_scenario(name_or_path: str) -> Scenario:
    """Built-in name first, else a TOML file path."""
    try:
        return get_scenario(name_or_path)
    except KeyError:
        pass
    p = Path(name_or_path)
    if not p.exists():
        raise ScenarioError(f"{name_or_path!r} is neither a built-in scenario nor a file")
    return load_scenario(p)
