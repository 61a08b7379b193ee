"""Demonstration-mode state machine, admittance teleoperation, and signaling.

Three demonstration modalities are arbitrated here: admittance
teleoperation entered by pressing the input device, kinesthetic guidance
entered by pulling on the tool (detected as a discrepancy between the
robot-side wrench estimate and the tool-side axial sensor), and the
detached "natural" flow refined into Ready/Tracking/Lost states with LED
and beep feedback.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Mode(enum.Enum):
    IDLE = "idle"
    TELEOPERATION = "teleoperation"
    KINESTHETIC = "kinesthetic"
    NATURAL_READY = "natural_ready"
    NATURAL_TRACKING = "natural_tracking"
    NATURAL_LOST = "natural_lost"


NATURAL_MODES = frozenset({Mode.NATURAL_READY, Mode.NATURAL_TRACKING, Mode.NATURAL_LOST})
ATTACHED_MODES = frozenset({Mode.IDLE, Mode.TELEOPERATION, Mode.KINESTHETIC})


class Led(enum.Enum):
    OFF = "off"
    SOLID = "solid"
    FLASH_BLUE = "flash_blue"
    FORCE_GRADIENT = "force_gradient"


@dataclass(frozen=True)
class Signals:
    led: Led
    beep: bool
    force_level: float = 0.0


@dataclass(frozen=True)
class ControllerInputs:
    device_twist: np.ndarray
    device_pressed: bool
    robot_wrench_est: np.ndarray  # N / N*m, force part in world frame
    tool_axial_force: float  # N, positive = pull along tool z
    tool_attached: bool
    pin_pulled: bool
    marker_seen_now: bool
    tracking: bool  # tracker status, True while markers recent
    tool_axis_in_world: np.ndarray
    time: float


@dataclass
class TeleopConfig:
    lin_gain: float = 0.05  # m/s per unit input
    ang_gain: float = 0.3  # rad/s per unit input
    force_limit: float = 15.0  # N
    warn_fraction: float = 0.8
    admittance_compliance: float = 0.05 / 15.0  # m/(s*N)
    pull_threshold: float = 3.0  # N
    discrepancy_threshold: float = 2.5  # N
    kinesthetic_hold_time: float = 1.0  # s below threshold before exit
    debounce_ticks: int = 3
    max_lin_speed: float = 0.2  # m/s hard cap on any commanded twist
    max_ang_speed: float = 1.0  # rad/s

    def __post_init__(self):
        if self.force_limit <= 0:
            raise ValueError("force_limit must be positive")
        if not 0.0 < self.warn_fraction < 1.0:
            raise ValueError("warn_fraction must be in (0, 1)")


def force_feedback_level(contact_force: float, config: TeleopConfig) -> float:
    """Fraction of the force limit in use, clamped to [0, 1]."""
    return float(np.clip(abs(contact_force) / config.force_limit, 0.0, 1.0))


def force_discrepancy(
    robot_wrench_est: np.ndarray, tool_axial_force: float, tool_axis_in_world: np.ndarray
) -> float:
    """|robot force along the tool axis - tool-side axial reading| in N."""
    axis = np.asarray(tool_axis_in_world, dtype=float)
    robot_axial = float(np.asarray(robot_wrench_est, dtype=float)[:3] @ axis)
    return abs(robot_axial - tool_axial_force)


def admittance_command(inputs: ControllerInputs, config: TeleopConfig) -> np.ndarray:
    """Teleop twist command: scaled device input, yielding against contact.

    The velocity component pushing into the contact is reduced in
    proportion to the measured contact force; at a force of
    lin_gain / compliance the into-contact motion stops entirely.
    """
    if not inputs.device_pressed:
        return np.zeros(6)
    twist = np.concatenate(
        [
            config.lin_gain * np.asarray(inputs.device_twist[:3], dtype=float),
            config.ang_gain * np.asarray(inputs.device_twist[3:], dtype=float),
        ]
    )
    contact = np.asarray(inputs.robot_wrench_est[:3], dtype=float)
    fmag = float(np.linalg.norm(contact))
    if fmag > 1e-9:
        into = -contact / fmag  # direction opposing the contact reaction
        v_into = float(twist[:3] @ into)
        if v_into > 0.0:
            scale = max(0.0, 1.0 - config.admittance_compliance * fmag / config.lin_gain)
            twist[:3] += (scale - 1.0) * v_into * into
    lin = float(np.linalg.norm(twist[:3]))
    if lin > config.max_lin_speed:
        twist[:3] *= config.max_lin_speed / lin
    ang = float(np.linalg.norm(twist[3:]))
    if ang > config.max_ang_speed:
        twist[3:] *= config.max_ang_speed / ang
    return twist


def transition(mode: Mode, inputs: ControllerInputs, config: TeleopConfig,
               kinesthetic_quiet_time: float = 0.0) -> tuple[Mode, bool]:
    """Pure transition table.  Returns (next mode, fault flag).

    `kinesthetic_quiet_time` is how long the force discrepancy has been
    below threshold; the debounced inputs are supplied by the caller.
    """
    fault = False
    contact = float(np.linalg.norm(np.asarray(inputs.robot_wrench_est[:3], dtype=float)))
    discrepancy = force_discrepancy(
        inputs.robot_wrench_est, inputs.tool_axial_force, inputs.tool_axis_in_world
    )

    if inputs.tool_attached and inputs.pin_pulled:
        # contradictory sensors: safe fallback
        return Mode.IDLE, True

    if mode in ATTACHED_MODES:
        if inputs.pin_pulled and not inputs.tool_attached:
            return Mode.NATURAL_READY, fault
        if mode is Mode.IDLE:
            # entry is blocked while contact already exceeds the limit,
            # otherwise the force-limit exit would re-enter immediately
            if inputs.tool_attached and inputs.device_pressed and contact <= config.force_limit:
                return Mode.TELEOPERATION, fault
            if (
                inputs.tool_attached
                and discrepancy > config.discrepancy_threshold
                and inputs.tool_axial_force > config.pull_threshold
            ):
                return Mode.KINESTHETIC, fault
            return Mode.IDLE, fault
        if mode is Mode.TELEOPERATION:
            if contact > config.force_limit:
                return Mode.IDLE, fault
            if not inputs.device_pressed:
                return Mode.IDLE, fault
            return Mode.TELEOPERATION, fault
        if mode is Mode.KINESTHETIC:
            if (
                discrepancy <= config.discrepancy_threshold
                and kinesthetic_quiet_time >= config.kinesthetic_hold_time
            ):
                return Mode.IDLE, fault
            return Mode.KINESTHETIC, fault

    # natural flow
    if inputs.tool_attached:
        return Mode.IDLE, fault
    if mode is Mode.NATURAL_READY:
        if inputs.marker_seen_now:
            return Mode.NATURAL_TRACKING, fault
        if not inputs.tracking:
            # nothing sighted for the whole timeout since detach: start beeping
            return Mode.NATURAL_LOST, fault
        return Mode.NATURAL_READY, fault
    if mode is Mode.NATURAL_TRACKING:
        if not inputs.tracking:
            return Mode.NATURAL_LOST, fault
        return Mode.NATURAL_TRACKING, fault
    if mode is Mode.NATURAL_LOST:
        if inputs.marker_seen_now:
            return Mode.NATURAL_TRACKING, fault
        return Mode.NATURAL_LOST, fault
    raise AssertionError(f"unhandled mode {mode}")


def signals_for(mode: Mode, inputs: ControllerInputs, config: TeleopConfig) -> Signals:
    if mode is Mode.NATURAL_READY:
        return Signals(Led.FLASH_BLUE, beep=False)
    if mode is Mode.NATURAL_LOST:
        return Signals(Led.SOLID, beep=True)
    if mode is Mode.TELEOPERATION:
        contact = float(np.linalg.norm(np.asarray(inputs.robot_wrench_est[:3], dtype=float)))
        return Signals(Led.FORCE_GRADIENT, beep=False, force_level=force_feedback_level(contact, config))
    return Signals(Led.SOLID if mode is not Mode.IDLE else Led.OFF, beep=False)


class _Debouncer:
    """Boolean input must hold for n consecutive ticks to register a change."""

    def __init__(self, initial: bool, ticks: int):
        self.value = initial
        self.ticks = ticks
        self._count = 0

    def update(self, raw: bool) -> bool:
        if raw == self.value:
            self._count = 0
        else:
            self._count += 1
            if self._count >= self.ticks:
                self.value = raw
                self._count = 0
        return self.value


@dataclass(frozen=True)
class StepResult:
    mode: Mode
    signals: Signals
    robot_twist: np.ndarray  # commanded 6-vector velocity
    fault: bool


class ModeController:
    """Drives the transition table each tick with debounced sensor inputs."""

    def __init__(self, config: TeleopConfig | None = None):
        self.config = config or TeleopConfig()
        self.mode = Mode.IDLE
        n = self.config.debounce_ticks
        self._db_attached = _Debouncer(True, n)
        self._db_pin = _Debouncer(False, n)
        self._db_pressed = _Debouncer(False, n)
        self._quiet_since: float | None = None
        self._last_time: float | None = None

    def step(self, inputs: ControllerInputs) -> StepResult:
        debounced = ControllerInputs(
            device_twist=inputs.device_twist,
            device_pressed=self._db_pressed.update(inputs.device_pressed),
            robot_wrench_est=inputs.robot_wrench_est,
            tool_axial_force=inputs.tool_axial_force,
            tool_attached=self._db_attached.update(inputs.tool_attached),
            pin_pulled=self._db_pin.update(inputs.pin_pulled),
            marker_seen_now=inputs.marker_seen_now,
            tracking=inputs.tracking,
            tool_axis_in_world=inputs.tool_axis_in_world,
            time=inputs.time,
        )

        discrepancy = force_discrepancy(
            debounced.robot_wrench_est, debounced.tool_axial_force, debounced.tool_axis_in_world
        )
        if discrepancy <= self.config.discrepancy_threshold:
            if self._quiet_since is None:
                self._quiet_since = inputs.time
            quiet = inputs.time - self._quiet_since
        else:
            self._quiet_since = None
            quiet = 0.0

        self.mode, fault = transition(self.mode, debounced, self.config, quiet)

        if self.mode is Mode.TELEOPERATION:
            twist = admittance_command(debounced, self.config)
        else:
            twist = np.zeros(6)
        sig = signals_for(self.mode, debounced, self.config)
        self._last_time = inputs.time
        return StepResult(self.mode, sig, twist, fault)
