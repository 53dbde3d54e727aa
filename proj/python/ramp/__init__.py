"""Reaction-aware planning and simulation of climbing robots."""

import json
from os import PathLike
from typing import Optional, Sequence, Union

from ._ramp import (
    BezierCurve,
    ComparisonError,
    ConfigError,
    DimensionError,
    DomainError,
    Error,
    InfeasibleTrajectory,
    JointLimitError,
    ModelError,
    RobotModel,
    ScenarioConfig,
    SingularityError,
    SystemState,
    UnreachableTarget,
    ViaPointSpline,
    base_velocity,
    boundary_constrained_curve,
    forward_kinematics,
    inverse_kinematics,
    jacobians,
    load_robot,
    load_scenario,
    load_scenario_model,
    make_via_point_spline,
    system_momentum,
)
from . import _ramp

PathType = Union[str, PathLike]


def scenario_from_dict(doc: dict, directory: PathType) -> ScenarioConfig:
    """Builds a scenario from a parsed document; relative paths resolve against `directory`."""
    return _ramp.scenario_from_json(json.dumps(doc), directory)


def scenario_to_dict(config: ScenarioConfig) -> dict:
    return json.loads(config.to_json())


def run(config: Union[ScenarioConfig, PathType], plan_only: bool = False,
        out: Optional[PathType] = None) -> dict:
    """Plans and simulates a scenario and returns its summary."""
    if not isinstance(config, ScenarioConfig):
        config = load_scenario(config)
    return json.loads(_ramp.run(config, plan_only, out))


def compare(configs: Sequence[Union[ScenarioConfig, PathType]]):
    """Runs comparable scenarios; returns (summary dict, formatted table)."""
    loaded = [c if isinstance(c, ScenarioConfig) else load_scenario(c) for c in configs]
    text, table = _ramp.compare(loaded)
    return json.loads(text), table
