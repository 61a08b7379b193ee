"""Fiducial-based tool-pose tracking.

Each marker sighting, combined with the marker's known mount pose on the
tool, gives a full 6-DoF tool-pose measurement.  An extended Kalman filter
with a 6-dimensional error state (3 position + 3 rotation-vector
components, right perturbation) fuses these measurements; the estimate is
published on a fixed 5 Hz boundary so several sightings can contribute to
each output, and tracking is declared lost after a configurable quiet
period.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .se3 import (
    Pose,
    quat_conjugate,
    quat_multiply,
    quat_to_rotvec,
    rotvec_to_quat,
)

PUBLISH_PERIOD = 0.2  # 5 Hz output


@dataclass(frozen=True)
class MarkerLayout:
    """Known marker mounts on the rigid tool: id -> (pose in tool frame, edge)."""

    entries: tuple[tuple[int, Pose, float], ...]

    def __post_init__(self):
        ids = [mid for mid, _, _ in self.entries]
        if not ids:
            raise ValueError("layout needs at least one marker")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate marker ids in layout")

    def marker_in_tool(self, marker_id: int) -> Pose:
        for mid, pose, _ in self.entries:
            if mid == marker_id:
                return pose
        raise KeyError(f"marker id {marker_id} not in layout")

    def ids(self) -> list[int]:
        return [mid for mid, _, _ in self.entries]


@dataclass(frozen=True)
class MarkerObservation:
    marker_id: int
    marker_in_camera: Pose
    timestamp: float


@dataclass(frozen=True)
class ToolEstimate:
    tool_in_world: Pose
    covariance: np.ndarray  # 6x6, [position; rotation-vector] error state
    timestamp: float
    tracking: bool


def marker_to_tool_pose(
    obs: MarkerObservation, layout: MarkerLayout, camera_in_world: Pose
) -> Pose:
    """tool_in_world = camera_in_world * marker_in_camera * inv(marker_in_tool)."""
    marker_in_tool = layout.marker_in_tool(obs.marker_id)
    return camera_in_world.compose(obs.marker_in_camera).compose(marker_in_tool.inverse())


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def ekf_predict(state: ToolEstimate, dt: float, process_noise: np.ndarray) -> ToolEstimate:
    """Random-walk pose model: mean held, covariance grows by diag(q) * dt."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return state
    cov = _symmetrize(state.covariance + np.diag(np.asarray(process_noise, dtype=float)) * dt)
    return replace(state, covariance=cov, timestamp=state.timestamp + dt)


def ekf_update(
    state: ToolEstimate, measured_tool_pose: Pose, meas_noise: np.ndarray
) -> ToolEstimate:
    """Full-pose measurement update.

    The rotation innovation is the rotation vector of the relative rotation
    between estimate and measurement, so H = I on the error state.
    """
    if not (
        np.all(np.isfinite(measured_tool_pose.position))
        and np.all(np.isfinite(measured_tool_pose.quat))
    ):
        raise ValueError("non-finite measurement rejected")
    mean = state.tool_in_world
    innov = np.empty(6)
    innov[:3] = measured_tool_pose.position - mean.position
    innov[3:] = quat_to_rotvec(quat_multiply(quat_conjugate(mean.quat), measured_tool_pose.quat))

    p = state.covariance
    r = np.diag(np.asarray(meas_noise, dtype=float))
    k = p @ np.linalg.inv(p + r)
    delta = k @ innov
    cov = _symmetrize((np.eye(6) - k) @ p)

    new_pose = Pose(
        mean.position + delta[:3],
        quat_multiply(mean.quat, rotvec_to_quat(delta[3:])),
    )
    return replace(state, tool_in_world=new_pose, covariance=cov)


@dataclass
class TrackerConfig:
    process_noise: np.ndarray = field(default_factory=lambda: np.full(6, 1e-3))
    meas_noise: np.ndarray = field(
        default_factory=lambda: np.array([0.005**2] * 3 + [0.02**2] * 3)
    )
    init_cov: np.ndarray = field(default_factory=lambda: np.array([0.01] * 3 + [0.1] * 3))
    lost_timeout: float = 0.6  # three publication periods

    def __post_init__(self):
        self.process_noise = np.asarray(self.process_noise, dtype=float)
        self.meas_noise = np.asarray(self.meas_noise, dtype=float)
        self.init_cov = np.asarray(self.init_cov, dtype=float)


class ToolTracker:
    """Single-owner stateful fuser; all mutation goes through ingest()."""

    def __init__(self, layout: MarkerLayout, config: TrackerConfig | None = None):
        self.layout = layout
        self.config = config or TrackerConfig()
        self.state: ToolEstimate | None = None
        self.last_seen: float | None = None
        self.last_publish: float | None = None
        self.published: ToolEstimate | None = None

    def ingest(
        self,
        observations: list[MarkerObservation],
        camera_in_world: Pose,
        now: float,
    ) -> ToolEstimate | None:
        """Fuse observations; return a published snapshot on 5 Hz boundaries."""
        if self.state is not None:
            dt = max(0.0, now - self.state.timestamp)
            self.state = ekf_predict(self.state, dt, self.config.process_noise)

        for obs in observations:
            measured = marker_to_tool_pose(obs, self.layout, camera_in_world)
            if self.state is None:
                self.state = ToolEstimate(
                    measured, np.diag(self.config.init_cov), now, tracking=True
                )
            else:
                self.state = ekf_update(self.state, measured, self.config.meas_noise)
            self.last_seen = now

        if self.state is None:
            return None
        published = None
        if self.last_publish is None or now - self.last_publish >= PUBLISH_PERIOD - 1e-9:
            published = replace(
                self.state, timestamp=now, tracking=self.status(now) == "tracking"
            )
            self.published = published
            self.last_publish = now
        return published

    def arm(self, now: float) -> None:
        """Grant a fresh timeout window (e.g. right after the tool detaches)."""
        if self.last_seen is None or self.last_seen < now:
            self.last_seen = now

    def status(self, now: float) -> str:
        """'tracking' or 'lost'; lost once no marker has been seen for the timeout."""
        if self.last_seen is None:
            return "lost"
        return "lost" if now - self.last_seen > self.config.lost_timeout else "tracking"
