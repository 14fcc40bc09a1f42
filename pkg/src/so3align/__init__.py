"""Geometric attitude alignment of 3D unicycle robots on SO(3)."""

from .control import ControllerMode, ControllerParams
from .scenario import parse_scenario, preset
from .sim import RobotSpec, SimConfig, TargetEvent, TargetMode, TargetSpec, Trajectory, run

__version__ = "0.1.0"

__all__ = [
    "ControllerMode",
    "ControllerParams",
    "RobotSpec",
    "SimConfig",
    "TargetEvent",
    "TargetMode",
    "TargetSpec",
    "Trajectory",
    "parse_scenario",
    "preset",
    "run",
]
