"""Constrained camera-viewpoint optimizer.

The camera pose is parameterized by five decision variables
(x, y, z, theta_x, theta_y); the z-axis rotation is a fixed configuration
value so the camera always faces the operator.  The commanded pose locally
minimizes a weighted sum of four objectives (viewing distance, tool
centering, neutral position, neutral y-angle) under box constraints via
bounded quasi-Newton descent with an analytic gradient, and the resulting
command is rate-limited in position and angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as sp_minimize

from .se3 import Pose, quat_from_axis_angle, quat_multiply

Z_HAT = np.array([0.0, 0.0, 1.0])


@dataclass
class OptimizerConfig:
    w1: float = 100.0
    w2: float = 100.0
    w3: float = 2.0
    w4: float = 0.5
    d: float = 0.3
    p_n: np.ndarray = field(default_factory=lambda: np.array([0.0, -0.4, 0.35]))
    pos_lo: np.ndarray = field(default_factory=lambda: np.array([-0.3, -0.45, -0.2]))
    pos_hi: np.ndarray = field(default_factory=lambda: np.array([0.3, -0.25, 0.55]))
    theta_x_lo: float = -0.45
    theta_x_hi: float = 0.0
    theta_y_lo: float = -0.8
    theta_y_hi: float = 0.8
    theta_z_fixed: float = 0.0
    v_lin_max: float = 0.01
    v_ang_max: float = 0.1
    max_iterations: int = 200
    step_tolerance: float = 1e-7

    def __post_init__(self):
        self.p_n = np.asarray(self.p_n, dtype=float)
        self.pos_lo = np.asarray(self.pos_lo, dtype=float)
        self.pos_hi = np.asarray(self.pos_hi, dtype=float)
        if not np.all(self.pos_lo < self.pos_hi):
            raise ValueError("pos_lo must be strictly below pos_hi")
        if self.theta_x_lo > self.theta_x_hi or self.theta_y_lo > self.theta_y_hi:
            raise ValueError("angle bounds inverted")
        if min(self.w1, self.w2, self.w3, self.w4) < 0:
            raise ValueError("weights must be nonnegative")
        if self.d <= 0 or self.v_lin_max <= 0 or self.v_ang_max <= 0:
            raise ValueError("d and velocity limits must be positive")

    @property
    def lower(self) -> np.ndarray:
        return np.concatenate([self.pos_lo, [self.theta_x_lo, self.theta_y_lo]])

    @property
    def upper(self) -> np.ndarray:
        return np.concatenate([self.pos_hi, [self.theta_x_hi, self.theta_y_hi]])


@dataclass(frozen=True)
class CameraDecision:
    position: np.ndarray
    theta_x: float
    theta_y: float

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, [self.theta_x, self.theta_y]])

    @staticmethod
    def from_vector(x: np.ndarray) -> "CameraDecision":
        return CameraDecision(x[:3], float(x[3]), float(x[4]))


def neutral_decision(config: OptimizerConfig) -> CameraDecision:
    return CameraDecision(config.p_n.copy(), 0.0, 0.0)


def decision_quat(theta_x: float, theta_y: float, theta_z_fixed: float) -> np.ndarray:
    """Camera orientation for decision angles: Rz(fixed) * Ry(ty) * Rx(tx)."""
    qz = quat_from_axis_angle(Z_HAT, theta_z_fixed)
    qy = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), theta_y)
    qx = quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), theta_x)
    return quat_multiply(quat_multiply(qz, qy), qx)


def decision_to_pose(decision: CameraDecision, config: OptimizerConfig) -> Pose:
    return Pose(decision.position, decision_quat(decision.theta_x, decision.theta_y, config.theta_z_fixed))


def optical_axis(theta_x: float, theta_y: float, theta_z: float) -> np.ndarray:
    """World-frame camera z-axis, a = Rz Ry Rx * z_hat, in closed form."""
    sx, cx = math.sin(theta_x), math.cos(theta_x)
    sy, cy = math.sin(theta_y), math.cos(theta_y)
    sz, cz = math.sin(theta_z), math.cos(theta_z)
    return np.array([cz * sy * cx + sz * sx, sz * sy * cx - cz * sx, cy * cx])


def _axis_partials(theta_x: float, theta_y: float, theta_z: float) -> tuple[np.ndarray, np.ndarray]:
    sx, cx = math.sin(theta_x), math.cos(theta_x)
    sy, cy = math.sin(theta_y), math.cos(theta_y)
    sz, cz = math.sin(theta_z), math.cos(theta_z)
    da_dx = np.array([-cz * sy * sx + sz * cx, -sz * sy * sx - cz * cx, -cy * sx])
    da_dy = np.array([cz * cy * cx, sz * cy * cx, -sy * cx])
    return da_dx, da_dy


def objective_distance(camera: Pose, tool_pos: np.ndarray, d: float) -> float:
    """Squared error between camera-frame viewing depth of the tool and d.

    The world offset is rotated into the camera frame before taking the
    z-component, so the term measures depth along the optical axis.
    """
    offset = np.asarray(tool_pos, dtype=float) - camera.position
    depth = float(offset @ (camera.rotation_matrix() @ Z_HAT))
    return (depth - d) ** 2


def objective_centering(camera: Pose, tool_pos: np.ndarray) -> float:
    """Squared misalignment of the optical axis with the camera-to-tool ray."""
    offset = np.asarray(tool_pos, dtype=float) - camera.position
    r = np.linalg.norm(offset)
    if r < 1e-9:
        raise ValueError("tool coincident with camera: centering undefined")
    axis = camera.rotation_matrix() @ Z_HAT
    return float((offset @ axis) / r - 1.0) ** 2


def objective_neutral_position(camera_pos: np.ndarray, p_n: np.ndarray) -> float:
    diff = np.asarray(camera_pos, dtype=float) - np.asarray(p_n, dtype=float)
    return float(diff @ diff)


def objective_neutral_rotation(decision: CameraDecision, config: OptimizerConfig) -> float:
    """Only deviation of the y-angle from neutral is penalized."""
    return decision.theta_y**2


def objective_terms(
    config: OptimizerConfig, decision: CameraDecision, tool_pos: np.ndarray
) -> np.ndarray:
    """Unweighted (phi1, phi2, phi3, phi4) at the decision."""
    camera = decision_to_pose(decision, config)
    return np.array(
        [
            objective_distance(camera, tool_pos, config.d),
            objective_centering(camera, tool_pos),
            objective_neutral_position(decision.position, config.p_n),
            objective_neutral_rotation(decision, config),
        ]
    )


def total_objective(config: OptimizerConfig, decision: CameraDecision, tool: Pose) -> float:
    phi = objective_terms(config, decision, tool.position)
    return float(np.array([config.w1, config.w2, config.w3, config.w4]) @ phi)


def _value_and_gradient(
    config: OptimizerConfig, x: np.ndarray, tool_pos: np.ndarray
) -> tuple[float, np.ndarray]:
    p_r, tx, ty = x[:3], float(x[3]), float(x[4])
    tz = config.theta_z_fixed
    a = optical_axis(tx, ty, tz)
    da_dx, da_dy = _axis_partials(tx, ty, tz)
    offset = tool_pos - p_r
    r = float(np.linalg.norm(offset))
    if r < 1e-9:
        raise ValueError("tool coincident with camera")
    u = offset / r

    g = np.zeros(5)
    # phi1: (offset . a - d)^2
    e1 = float(offset @ a) - config.d
    f = config.w1 * e1 * e1
    g[:3] += config.w1 * 2.0 * e1 * (-a)
    g[3] += config.w1 * 2.0 * e1 * float(offset @ da_dx)
    g[4] += config.w1 * 2.0 * e1 * float(offset @ da_dy)
    # phi2: (u . a - 1)^2, du/dp_r = -(I - u u^T)/r
    e2 = float(u @ a) - 1.0
    f += config.w2 * e2 * e2
    g[:3] += config.w2 * 2.0 * e2 * (-(a - u * float(u @ a)) / r)
    g[3] += config.w2 * 2.0 * e2 * float(u @ da_dx)
    g[4] += config.w2 * 2.0 * e2 * float(u @ da_dy)
    # phi3: ||p_r - p_n||^2
    diff = p_r - config.p_n
    f += config.w3 * float(diff @ diff)
    g[:3] += config.w3 * 2.0 * diff
    # phi4: theta_y^2
    f += config.w4 * ty * ty
    g[4] += config.w4 * 2.0 * ty
    return f, g


def gradient(config: OptimizerConfig, decision: CameraDecision, tool: Pose) -> np.ndarray:
    """Analytic partials of the total objective wrt (x, y, z, theta_x, theta_y)."""
    _, g = _value_and_gradient(config, decision.as_vector(), tool.position)
    return g


def project(x: np.ndarray, config: OptimizerConfig) -> np.ndarray:
    return np.clip(x, config.lower, config.upper)


@dataclass(frozen=True)
class SolveResult:
    decision: CameraDecision
    objective: float
    iterations: int
    converged: bool
    error: str | None = None


def solve(
    config: OptimizerConfig, current: CameraDecision, tool_estimate: Pose
) -> SolveResult:
    """Box-constrained local descent warm-started at `current`.

    Monotone: the returned decision never scores worse than the warm start.
    A non-finite tool estimate is refused and `current` comes back flagged.
    """
    tool_pos = tool_estimate.position
    if not np.all(np.isfinite(tool_pos)) or not np.all(np.isfinite(tool_estimate.quat)):
        return SolveResult(current, math.inf, 0, False, error="non-finite tool estimate")

    x0 = project(current.as_vector(), config)
    f0, _ = _value_and_gradient(config, x0, tool_pos)
    if not math.isfinite(f0):
        return SolveResult(current, math.inf, 0, False, error="non-finite objective")

    res = sp_minimize(
        lambda x: _value_and_gradient(config, x, tool_pos),
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(config.lower, config.upper)),
        options={
            "maxiter": config.max_iterations,
            "ftol": 1e-16,
            "gtol": config.step_tolerance,
        },
    )
    x = project(res.x, config)
    f, _ = _value_and_gradient(config, x, tool_pos)
    if f > f0:  # never return anything worse than the warm start
        return SolveResult(current, f0, int(res.nit), False)
    return SolveResult(CameraDecision.from_vector(x), f, int(res.nit), True)


def limit_velocity(
    prev: CameraDecision, next_dec: CameraDecision, dt: float, config: OptimizerConfig
) -> CameraDecision:
    """Clamp the commanded step to the linear and angular velocity caps."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    dp = next_dec.position - prev.position
    dist = float(np.linalg.norm(dp))
    max_lin = config.v_lin_max * dt
    if dist > max_lin:
        dp = dp * (max_lin / dist)
    dth = np.array([next_dec.theta_x - prev.theta_x, next_dec.theta_y - prev.theta_y])
    ang = float(np.linalg.norm(dth))
    max_ang = config.v_ang_max * dt
    if ang > max_ang:
        dth = dth * (max_ang / ang)
    x = np.concatenate([prev.position + dp, [prev.theta_x + dth[0], prev.theta_y + dth[1]]])
    return CameraDecision.from_vector(project(x, config))


def is_feasible(decision: CameraDecision, config: OptimizerConfig, tol: float = 1e-9) -> bool:
    x = decision.as_vector()
    return bool(np.all(x >= config.lower - tol) and np.all(x <= config.upper + tol))
