"""Bundled-project scene shared by the motion, CLI and acceptance tests."""
from dataclasses import dataclass
from functools import lru_cache

from wirebend import io
from wirebend.cli import approximate, build_scene
from wirebend.planner import BendingProblem, BendSequence, evaluate_sequence


@dataclass
class Scene:
    cfg: object
    machine: object
    robot: object
    env: object
    bends: object
    grasps: tuple
    problem: object
    steps: list  # step results of the in-order sequence


@lru_cache(maxsize=None)
def project_scene(name="project_2d.json"):
    cfg = io.load_project(name)
    machine, robot, env = build_scene(cfg)
    bends, _ = approximate(io.read_curve(cfg.curve), cfg.epsilon, machine.center_radius, cfg.wire_diameter)
    grasps = io.load_grasps(cfg.grasps, bends.wire.total_length)
    problem = BendingProblem(bends, machine, env, cfg.clearance)
    ev = evaluate_sequence(BendSequence.of(list(range(len(bends)))), problem)
    assert ev.ok
    return Scene(cfg, machine, robot, env, bends, grasps, problem, ev.steps)
