"""Rigid-body math shared by every module.

Rotations are unit quaternions stored as numpy arrays [w, x, y, z];
poses pair a position (meters) with a quaternion.  Every operation
re-normalizes, so unit norm holds to 1e-9 in long-running loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-12


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < _EPS:
        raise ValueError("cannot normalize zero quaternion")
    return q / n


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return quat_normalize(
        np.array(
            [
                aw * bw - ax * bx - ay * by - az * bz,
                aw * bx + ax * bw + ay * bz - az * by,
                aw * by - ax * bz + ay * bw + az * bx,
                aw * bz + ax * by - ay * bx + az * bw,
            ]
        )
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    w, x, y, z = q
    u = np.array([x, y, z])
    v = np.asarray(v, dtype=float)
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(m[i, i] - m[j, j] - m[k, k] + 1.0) * 2.0
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    return quat_normalize(q)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < _EPS:
        return quat_identity()
    axis = axis / n
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def rotvec_to_quat(rv: np.ndarray) -> np.ndarray:
    """Exponential map: rotation vector (axis * angle) to quaternion."""
    rv = np.asarray(rv, dtype=float)
    angle = np.linalg.norm(rv)
    if angle < 1e-10:
        # first-order expansion keeps the map smooth through zero
        return quat_normalize(np.concatenate([[1.0], 0.5 * rv]))
    return quat_from_axis_angle(rv, angle)


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Logarithm map: quaternion to rotation vector, angle in [0, pi]."""
    q = quat_normalize(q)
    if q[0] < 0:
        q = -q
    w = min(q[0], 1.0)
    vec = q[1:]
    sin_half = np.linalg.norm(vec)
    if sin_half < 1e-10:
        return 2.0 * vec
    angle = 2.0 * np.arctan2(sin_half, w)
    return (angle / sin_half) * vec


def rotation_angle(q: np.ndarray) -> float:
    """Magnitude of rotation in radians, in [0, pi].

    Equivalent to arccos((trace(R) - 1) / 2) with the argument clamped
    so floating-point overshoot near the identity cannot produce NaN.
    """
    q = quat_normalize(q)
    w = min(abs(q[0]), 1.0)
    return 2.0 * np.arccos(w)


@dataclass(frozen=True)
class Pose:
    """Rigid transform: position in meters plus a unit quaternion."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quat: np.ndarray = field(default_factory=quat_identity)

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "quat", quat_normalize(self.quat))

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        return Pose(m[:3, 3], matrix_to_quat(m[:3, :3]))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.quat)
        m[:3, 3] = self.position
        return m

    def compose(self, other: "Pose") -> "Pose":
        return Pose(
            self.position + quat_rotate(self.quat, other.position),
            quat_multiply(self.quat, other.quat),
        )

    def inverse(self) -> "Pose":
        q_inv = quat_conjugate(self.quat)
        return Pose(-quat_rotate(q_inv, self.position), q_inv)

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.position + quat_rotate(self.quat, p)

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.quat)


def compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def invert(p: Pose) -> Pose:
    return p.inverse()


def pose_error(a: Pose, b: Pose) -> tuple[float, float]:
    """(position distance in m, rotation distance in rad) between two poses."""
    dp = float(np.linalg.norm(a.position - b.position))
    dq = rotation_angle(quat_multiply(quat_conjugate(a.quat), b.quat))
    return dp, dq
