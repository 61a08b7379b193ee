"""Desk-scale demonstration-interface control stack.

Camera viewpoint optimization, fiducial-based tool tracking, admittance
teleoperation, and a demonstration-mode state machine, closed around a
deterministic kinematic simulator.
"""

from .se3 import Pose, compose, invert, rotation_angle
from .viewpoint import CameraDecision, OptimizerConfig, limit_velocity, solve, total_objective
from .tracker import MarkerLayout, MarkerObservation, ToolEstimate, ToolTracker
from .modes import Mode, ModeController, Signals, TeleopConfig
from .world import Scenario, Simulation, VisibilityConfig
from .scenarios import builtin_scenarios, get_scenario, load_scenario

__all__ = [
    "Pose",
    "compose",
    "invert",
    "rotation_angle",
    "CameraDecision",
    "OptimizerConfig",
    "limit_velocity",
    "solve",
    "total_objective",
    "MarkerLayout",
    "MarkerObservation",
    "ToolEstimate",
    "ToolTracker",
    "Mode",
    "ModeController",
    "Signals",
    "TeleopConfig",
    "Scenario",
    "Simulation",
    "VisibilityConfig",
    "builtin_scenarios",
    "get_scenario",
    "load_scenario",
]
