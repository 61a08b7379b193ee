"""Kinematic workcell simulation.

Single-threaded, deterministic closed loop around the viewpoint optimizer,
the marker tracker, and the mode controller.  The tool follows a scripted
waypoint trajectory (the simulated human hand) except in teleoperation,
where it integrates the commanded twist; contact with a horizontal plane
is a unilateral linear spring.  All randomness flows through one seeded
generator so a scenario + seed reproduces bit-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import viewpoint
from .modes import Mode, ModeController, ControllerInputs, TeleopConfig, NATURAL_MODES
from .se3 import (
    Pose,
    quat_conjugate,
    quat_multiply,
    quat_rotate,
    quat_to_rotvec,
    rotvec_to_quat,
)
from .tracker import MarkerLayout, MarkerObservation, ToolTracker, TrackerConfig
from .viewpoint import CameraDecision, OptimizerConfig


@dataclass
class VisibilityConfig:
    fov_half_angle: float = 0.6  # rad
    max_range: float = 1.0  # m
    min_range: float = 0.05  # m
    max_incidence: float = 1.1  # rad between marker normal and marker->camera ray
    dropout_prob: float = 0.0
    sigma_pos: float = 0.002  # m, observation noise
    sigma_rot: float = 0.01  # rad

    def __post_init__(self):
        if not 0 < self.fov_half_angle < math.pi / 2:
            raise ValueError("fov_half_angle out of range")
        if self.min_range >= self.max_range:
            raise ValueError("min_range must be below max_range")
        if not 0 < self.max_incidence < math.pi / 2 + 0.2:
            raise ValueError("max_incidence out of range")


@dataclass
class ContactConfig:
    plane_z: float | None = None  # no contact when None
    stiffness: float = 5000.0  # N/m


@dataclass
class Scenario:
    name: str
    duration: float
    tick: float = 0.02
    waypoints: list[tuple[float, Pose]] = field(default_factory=list)
    interactive: bool = False
    events: list[dict[str, Any]] = field(default_factory=list)
    marker_layout: MarkerLayout | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    teleop: TeleopConfig = field(default_factory=TeleopConfig)
    visibility: VisibilityConfig = field(default_factory=VisibilityConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    seed: int = 0
    goals: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.tick <= 0:
            raise ValueError("tick must be positive")
        if not self.interactive and not self.waypoints:
            raise ValueError("scripted scenario needs waypoints")


def slerp(qa: np.ndarray, qb: np.ndarray, s: float) -> np.ndarray:
    rel = quat_to_rotvec(quat_multiply(quat_conjugate(qa), qb))
    return quat_multiply(qa, rotvec_to_quat(s * rel))


def trajectory_pose(waypoints: list[tuple[float, Pose]], t: float) -> Pose:
    """Piecewise-linear position, slerp rotation; clamped at the endpoints."""
    if t <= waypoints[0][0]:
        return waypoints[0][1]
    if t >= waypoints[-1][0]:
        return waypoints[-1][1]
    for (t0, p0), (t1, p1) in zip(waypoints, waypoints[1:]):
        if t0 <= t <= t1:
            s = (t - t0) / (t1 - t0)
            return Pose(
                (1 - s) * p0.position + s * p1.position,
                slerp(p0.quat, p1.quat, s),
            )
    raise AssertionError("unreachable")


def visible_markers(
    camera: Pose,
    tool: Pose,
    layout: MarkerLayout,
    vis: VisibilityConfig,
    rng: np.random.Generator,
    now: float,
) -> list[MarkerObservation]:
    """Geometric visibility test plus Bernoulli dropout and Gaussian noise.

    A marker is visible iff its center lies inside the view cone, within
    range, and its normal faces the camera within the incidence limit.
    """
    cam_inv = camera.inverse()
    out: list[MarkerObservation] = []
    for marker_id, marker_in_tool, _edge in layout.entries:
        marker_world = tool.compose(marker_in_tool)
        in_cam = cam_inv.compose(marker_world)
        c = in_cam.position
        r = float(np.linalg.norm(c))
        if r < vis.min_range or r > vis.max_range:
            continue
        if c[2] <= 0 or math.acos(min(1.0, c[2] / r)) > vis.fov_half_angle:
            continue
        normal_world = quat_rotate(marker_world.quat, np.array([0.0, 0.0, 1.0]))
        to_camera = camera.position - marker_world.position
        to_camera /= np.linalg.norm(to_camera)
        incidence = math.acos(float(np.clip(normal_world @ to_camera, -1.0, 1.0)))
        if incidence > vis.max_incidence:
            continue
        if vis.dropout_prob > 0 and rng.random() < vis.dropout_prob:
            continue
        noisy = Pose(
            in_cam.position + vis.sigma_pos * rng.standard_normal(3),
            quat_multiply(in_cam.quat, rotvec_to_quat(vis.sigma_rot * rng.standard_normal(3))),
        )
        out.append(MarkerObservation(marker_id, noisy, now))
    return out


def contact_force(tool: Pose, contact: ContactConfig) -> np.ndarray:
    """Unilateral spring against the horizontal plane; zero torque."""
    wrench = np.zeros(6)
    if contact.plane_z is None:
        return wrench
    depth = contact.plane_z - tool.position[2]
    if depth > 0:
        wrench[2] = contact.stiffness * depth
    return wrench


class Simulation:
    """Owns all mutable state for one scenario run; step() advances one tick."""

    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        self.time = 0.0
        self.attached = True
        self.pin_pulled = False
        self.device_pressed = False
        self.device_twist = np.zeros(6)
        self.pull_force = 0.0
        self.tool_true = (
            scenario.waypoints[0][1] if scenario.waypoints else Pose(np.array([0.0, -0.35, 0.65]))
        )
        self.decision = viewpoint.neutral_decision(scenario.optimizer)
        self.camera_true = viewpoint.decision_to_pose(self.decision, scenario.optimizer)
        self.controller = ModeController(scenario.teleop)
        layout = scenario.marker_layout or default_marker_layout()
        self.tracker = ToolTracker(layout, scenario.tracker)
        self._events = sorted(scenario.events, key=lambda e: e["t"])
        self._next_event = 0
        self._teleop_twist = np.zeros(6)
        self._interactive_tool: Pose | None = None

    # -- external inputs (serve mode) ------------------------------------
    def set_tool_pose(self, pose: Pose) -> None:
        self._interactive_tool = pose

    def set_pull_force(self, force: float) -> None:
        self.pull_force = float(force)

    def set_device(self, pressed: bool, twist: np.ndarray | None = None) -> None:
        self.device_pressed = bool(pressed)
        if twist is not None:
            self.device_twist = np.asarray(twist, dtype=float).reshape(6)

    def pull_pin(self) -> None:
        self.pin_pulled = True
        self.attached = False
        self.tracker.arm(self.time)

    def reattach(self) -> None:
        self.pin_pulled = False
        self.attached = True

    # ---------------------------------------------------------------------
    def _apply_events(self) -> None:
        while self._next_event < len(self._events) and self._events[self._next_event]["t"] <= self.time:
            ev = self._events[self._next_event]
            self._next_event += 1
            kind = ev["kind"]
            if kind == "pull_pin":
                self.pull_pin()
            elif kind == "reattach":
                self.reattach()
            elif kind == "press_device":
                self.device_pressed = bool(ev.get("value", True))
            elif kind == "device_twist":
                self.device_twist = np.asarray(ev["value"], dtype=float).reshape(6)
            elif kind == "pull":
                self.pull_force = float(ev["value"])
            else:
                raise ValueError(f"unknown event kind {kind!r}")

    def _scripted_tool(self) -> Pose:
        if self.scenario.interactive:
            return self._interactive_tool or self.tool_true
        return trajectory_pose(self.scenario.waypoints, self.time)

    def step(self) -> dict[str, Any]:
        sc = self.scenario
        dt = sc.tick
        self.time += dt
        self._apply_events()

        # tool motion: teleop integrates the previous commanded twist,
        # everything else follows the scripted human hand (Idle holds)
        mode = self.controller.mode
        if self.attached and mode is Mode.TELEOPERATION:
            twist = self._teleop_twist
            self.tool_true = Pose(
                self.tool_true.position + twist[:3] * dt,
                quat_multiply(self.tool_true.quat, rotvec_to_quat(twist[3:] * dt)),
            )
        elif mode is Mode.KINESTHETIC or not self.attached:
            self.tool_true = self._scripted_tool()

        # The robot-side wrench estimate models environment interaction only
        # (the robot's dynamics model does not account for the hand), while
        # the tool-side load cell reads everything distal of it: environment
        # contact plus the operator's pull along the tool axis.  A pull with
        # a free end effector therefore shows up as pure discrepancy.
        wrench = contact_force(self.tool_true, sc.contact)
        tool_axis = quat_rotate(self.tool_true.quat, np.array([0.0, 0.0, 1.0]))
        robot_force = wrench[:3].copy()
        tool_axial = float(wrench[:3] @ tool_axis) + self.pull_force

        observations: list[MarkerObservation] = []
        if not self.attached:
            observations = visible_markers(
                self.camera_true, self.tool_true, self.tracker.layout, sc.visibility, self.rng, self.time
            )
            self.tracker.ingest(observations, self.camera_true, self.time)

        inputs = ControllerInputs(
            device_twist=self.device_twist,
            device_pressed=self.device_pressed,
            robot_wrench_est=np.concatenate([robot_force, wrench[3:]]),
            tool_axial_force=tool_axial,
            tool_attached=self.attached,
            pin_pulled=self.pin_pulled,
            marker_seen_now=bool(observations),
            tracking=self.tracker.status(self.time) == "tracking",
            tool_axis_in_world=tool_axis,
            time=self.time,
        )
        result = self.controller.step(inputs)
        self._teleop_twist = result.robot_twist

        # camera follows the optimizer only in the natural flow
        objectives = None
        est = self.tracker.published
        if result.mode in NATURAL_MODES and est is not None:
            solved = viewpoint.solve(sc.optimizer, self.decision, est.tool_in_world)
            target = solved.decision if solved.error is None else self.decision
            self.decision = viewpoint.limit_velocity(self.decision, target, dt, sc.optimizer)
            self.camera_true = viewpoint.decision_to_pose(self.decision, sc.optimizer)
        if est is not None:
            phi = viewpoint.objective_terms(sc.optimizer, self.decision, est.tool_in_world.position)
            total = float(
                np.array([sc.optimizer.w1, sc.optimizer.w2, sc.optimizer.w3, sc.optimizer.w4]) @ phi
            )
            objectives = {
                "phi1": float(phi[0]),
                "phi2": float(phi[1]),
                "phi3": float(phi[2]),
                "phi4": float(phi[3]),
                "total": total,
            }

        row: dict[str, Any] = {
            "time": round(self.time, 9),
            "mode": result.mode.value,
            "fault": result.fault,
            "attached": self.attached,
            "tool_true": _pose_dict(self.tool_true),
            "tool_estimate": None
            if est is None
            else {
                **_pose_dict(est.tool_in_world),
                "tracking": self.tracker.status(self.time) == "tracking",
            },
            "camera": {
                "position": self.decision.position.tolist(),
                "theta_x": self.decision.theta_x,
                "theta_y": self.decision.theta_y,
            },
            "objectives": objectives,
            "signals": {
                "led": result.signals.led.value,
                "beep": result.signals.beep,
                "force_level": result.signals.force_level,
            },
            "forces": {
                "contact": wrench.tolist(),
                "robot_force": robot_force.tolist(),
                "tool_axial": tool_axial,
            },
            "visible_markers": [o.marker_id for o in observations],
        }
        return row

    def run(self) -> list[dict[str, Any]]:
        rows = []
        n_ticks = int(round(self.scenario.duration / self.scenario.tick))
        for _ in range(n_ticks):
            rows.append(self.step())
        return rows


def _pose_dict(pose: Pose) -> dict[str, Any]:
    return {"position": pose.position.tolist(), "quat": pose.quat.tolist()}


def _rot_z_to(direction: np.ndarray) -> np.ndarray:
    """Quaternion taking +z to the given direction (minimal rotation)."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    z = np.array([0.0, 0.0, 1.0])
    c = float(z @ d)
    if c > 1 - 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    if c < -1 + 1e-12:
        return np.array([0.0, 1.0, 0.0, 0.0])  # 180 deg about x
    axis = np.cross(z, d)
    axis /= np.linalg.norm(axis)
    angle = math.acos(c)
    return rotvec_to_quat(axis * angle)


def default_marker_layout() -> MarkerLayout:
    """Five markers: four around the barrel at 90 deg spacing, normals tilted
    45 deg toward the front, plus one on the front face.  The back/top face
    carries no marker, so presenting it to the camera defeats tracking.
    """
    entries = []
    radius, front_z, edge = 0.02, 0.03, 0.03
    for i, psi in enumerate([0.0, math.pi / 2, math.pi, 3 * math.pi / 2]):
        radial = np.array([math.cos(psi), math.sin(psi), 0.0])
        pos = radius * radial + np.array([0.0, 0.0, front_z])
        normal = (radial + np.array([0.0, 0.0, 1.0])) / math.sqrt(2.0)
        entries.append((i, Pose(pos, _rot_z_to(normal)), edge))
    entries.append((4, Pose(np.array([0.0, 0.0, 0.05]), _rot_z_to(np.array([0.0, 0.0, 1.0]))), edge))
    return MarkerLayout(tuple(entries))
