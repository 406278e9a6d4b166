"""Runtime reachability verification of a learned mobile-robot controller
with switching to a geometric avoidance controller."""

from .controllers import Obstacle, ReferencePath, kb_control
from .flowpipe import ControlInput, Pose, flow_control_period
from .interval import Interval
from .network import NetworkSpec, nn_eval, nn_tm_propagate
from .supervisor import EpisodeLog, SafetyVerdict, SupervisorMode, run_episode, verify_nn_safe

__all__ = [
    "ControlInput",
    "EpisodeLog",
    "Interval",
    "NetworkSpec",
    "Obstacle",
    "Pose",
    "ReferencePath",
    "SafetyVerdict",
    "SupervisorMode",
    "flow_control_period",
    "kb_control",
    "nn_eval",
    "nn_tm_propagate",
    "run_episode",
    "verify_nn_safe",
]
