"""Experiment configuration (YAML) and scenario construction."""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .controllers import AvoidanceConfig, ExpertConfig, Obstacle, ReferencePath
from .flowpipe import Pose
from .supervisor import EpisodeSettings, VerificationSettings
from .trainer import StartJitter
from .world import DetectionConfig, Scenario, WorldMap, random_obstacles


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "world": {
        "size": 5.0,
        "robot_radius": 0.11,
        "start": [0.5, 1.0, 0.0],
        "path": {"start": [0.5, 1.0], "corner": [3.0, 1.0], "radius": 1.0, "end_y": 4.5, "goal_y": 4.0},
        "noise": [0.01, 0.01, 0.01],
        "obstacles": [],
        "random_obstacles": 0,
        "obstacle_radius": [0.15, 0.4],
    },
    "detection": {
        "wall_margin": 0.05,
        "cluster_gap": 0.15,
        "max_obstacle_radius": 0.4,
    },
    "avoidance": {"d": 0.75, "tangential_source": "u_m"},
    "expert": {"lookahead": 0.5, "omega_max": 1.5},
    "training": {
        "n_traj": 100,
        "jitter": {"along": 4.0, "lateral": 0.5, "heading": 0.8},
        "epochs": 60,
        "learning_rate": 0.01,
        "batch_size": 64,
        "momentum": 0.9,
        "decay_every": 20,
        "hidden": [64, 64],
    },
    "verification": {
        "steps": 10,
        "tm_degree": 2,
        "bp_order": 2,
        "delta": 0.2,
        "substeps": 10,
        "picard_iters": 3,
        "deadline": 0.2,
        "timeout": 200.0,
    },
    "sweep": {
        "steps": [10, 15, 20, 30],
        "tm_degrees": [1, 2, 3],
        "bp_orders": [1, 2, 3],
        "episodes": 10,
        "obstacles": 1,
    },
    "render": {"box_stride": 5},
}


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown configuration key {where}{k}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{where}{k} must be a mapping")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


def load_config(path=None) -> dict:
    """Defaults overlaid with the YAML file at ``path`` (if any)."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        doc = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read configuration {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    cfg = _merge(DEFAULTS, doc)
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        verification_settings(cfg)
        avoidance_config(cfg)
        detection_config(cfg)
        reference_path(cfg)
        if len(cfg["world"]["start"]) != 3 or len(cfg["world"]["noise"]) != 3:
            raise ConfigError("world.start and world.noise need three entries")
        if cfg["verification"]["deadline"] <= 0 or cfg["verification"]["timeout"] <= 0:
            raise ConfigError("deadline and timeout must be positive")
    except (TypeError, ValueError, KeyError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e


def default_weights_path() -> Path:
    return Path(str(resources.files("rtverify") / "data" / "controller.json"))


def reference_path(cfg: dict) -> ReferencePath:
    p = cfg["world"]["path"]
    return ReferencePath.left_turn(tuple(p["start"]), tuple(p["corner"]), p["radius"], p["end_y"], p["goal_y"])


def verification_settings(cfg: dict, **override) -> VerificationSettings:
    v = cfg["verification"]
    kw = {k: v[k] for k in ("steps", "tm_degree", "bp_order", "delta", "substeps", "picard_iters")}
    kw.update({k: val for k, val in override.items() if val is not None})
    return VerificationSettings(**kw)


def episode_settings(cfg: dict, deadline=None) -> EpisodeSettings:
    v = cfg["verification"]
    return EpisodeSettings(timeout=float(v["timeout"]), deadline=float(deadline or v["deadline"]))


def avoidance_config(cfg: dict) -> AvoidanceConfig:
    a = cfg["avoidance"]
    return AvoidanceConfig(d=a["d"], tangential_source=a["tangential_source"], robot_radius=cfg["world"]["robot_radius"])


def expert_config(cfg: dict) -> ExpertConfig:
    e = cfg["expert"]
    return ExpertConfig(lookahead=e["lookahead"], omega_max=e["omega_max"])


def detection_config(cfg: dict) -> DetectionConfig:
    return DetectionConfig(**cfg["detection"])


def start_jitter(cfg: dict) -> StartJitter:
    return StartJitter(**cfg["training"]["jitter"])


def build_scenario(cfg: dict, seed: int, n_obstacles: int | None = None, name: str = "scenario") -> Scenario:
    """Scenario for one episode; random obstacles are drawn from ``seed``."""
    w = cfg["world"]
    path = reference_path(cfg)
    start = Pose(*map(float, w["start"]))
    if n_obstacles is None and w["obstacles"]:
        obs = [Obstacle(float(x), float(y), float(r)) for x, y, r in w["obstacles"]]
    else:
        n = w["random_obstacles"] if n_obstacles is None else n_obstacles
        rng = np.random.default_rng([seed, 1])
        obs = random_obstacles(path, n, rng, start, w["size"], tuple(w["obstacle_radius"])) if n else []
    world = WorldMap(w["size"], tuple(obs), w["robot_radius"])
    return Scenario(world, start, path, tuple(map(float, w["noise"])), seed, name, detection_config(cfg))
