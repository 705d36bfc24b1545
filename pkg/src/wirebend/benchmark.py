"""Randomised bending-set generation and the sequence-planning benchmark.

Instances come in groups of 3 to 8 bends: bend angle uniform in
[-pi, pi] (the sign picks the side), twist in [-pi, pi], lift in
[-pi/18, pi/18], and bend start points that never overlap.
"""
from dataclasses import dataclass, field
import math
import statistics
import time

import numpy as np

from . import sim
from .bendset import WireSpec, compute_bending_set, developed_length
from .geometry import rotation_about, unit
from .planner import BendingProblem, prune_search

MIN_SPACING = 0.005  # straight wire kept between neighbouring arcs
MAX_GEN_TURN = math.radians(170.0)  # tangent length blows up near a full fold


def random_chain(n, rng, r_c=0.006, lead=(0.08, 0.12), extra=(0.0, 0.03), tail=(0.02, 0.05)):
    """Random pivot chain with ``n`` bends.

    Returns ``(pivots, params)`` where ``params`` lists the sampled
    ``(theta, alpha, beta)`` of each bend.
    """
    x = np.array([1.0, 0.0, 0.0])
    z = np.array([0.0, 0.0, 1.0])
    dirs = [x]
    params = []
    turns = []
    while len(params) < n:
        theta = rng.uniform(-math.pi, math.pi)
        alpha = rng.uniform(-math.pi, math.pi)
        beta = rng.uniform(-math.pi / 18.0, math.pi / 18.0)
        y = np.cross(z, x)
        inplane = -math.cos(abs(theta)) * x + math.copysign(math.sin(abs(theta)), theta) * y
        lifted = math.cos(beta) * inplane + math.sin(beta) * z
        d = rotation_about(x, alpha) @ lifted
        d = unit(d)
        turn = math.acos(max(-1.0, min(1.0, float(np.dot(d, x)))))
        if not math.radians(2.0) <= turn <= MAX_GEN_TURN:
            continue
        params.append((theta, alpha, beta))
        turns.append(turn)
        z = unit(np.cross(x, d))
        x = d
        dirs.append(d)
    tans = [r_c * math.tan(t / 2.0) for t in turns]
    lengths = [tans[0] + rng.uniform(*lead)]
    for i in range(1, n):
        lengths.append(tans[i - 1] + tans[i] + MIN_SPACING + rng.uniform(*extra))
    lengths.append(tans[-1] + rng.uniform(*tail))
    pts = [np.zeros(3)]
    for d, L in zip(dirs, lengths):
        pts.append(pts[-1] + L * d)
    return np.array(pts), params


def random_bend_set(n, rng, r_c=0.006, diameter=0.0016, **kw):
    pts, params = random_chain(n, rng, r_c, **kw)
    probe = compute_bending_set(pts, r_c, WireSpec(diameter, 10.0))
    bends = compute_bending_set(pts, r_c, WireSpec(diameter, developed_length(probe)))
    bends.meta["params"] = params
    return bends


@dataclass
class InstanceResult:
    group: int
    instance: int
    status: str
    wall_time: float
    nodes: int
    sequence: list = None


@dataclass
class BenchmarkReport:
    groups: dict = field(default_factory=dict)  # n -> list of InstanceResult
    seed: int = 0
    budget: float = 120.0

    def success_rate(self, n):
        rs = self.groups[n]
        return sum(r.status == "success" for r in rs) / len(rs)

    def times(self, n, status):
        return [r.wall_time for r in self.groups[n] if r.status == status]

    def table(self, timings=True):
        """Success rate per group, one row per bend count; mean times only if ``timings``."""
        head = "bends  instances  success  infeasible  timeout  success_rate"
        lines = [head + ("  mean_t_success  mean_t_failure" if timings else "")]
        for n in sorted(self.groups):
            rs = self.groups[n]
            ok = self.times(n, "success")
            bad = [r.wall_time for r in rs if r.status != "success"]
            row = (f"{n:5d}  {len(rs):9d}  {len(ok):7d}  {sum(r.status == 'infeasible' for r in rs):10d}"
                   f"  {sum(r.status == 'timeout' for r in rs):7d}  {self.success_rate(n):12.2f}")
            if timings:
                row += f"  {_mean(ok):14.4f}  {_mean(bad):14.4f}"
            lines.append(row)
        return "\n".join(lines)

    def to_dict(self, timings=True):
        out = {"seed": self.seed, "budget": self.budget, "groups": {}}
        for n, rs in sorted(self.groups.items()):
            out["groups"][str(n)] = [
                {
                    "instance": r.instance,
                    "status": r.status,
                    "nodes": r.nodes,
                    "sequence": r.sequence,
                    **({"wall_time": round(r.wall_time, 6)} if timings else {}),
                }
                for r in rs
            ]
        return out


def _mean(xs):
    return statistics.fmean(xs) if xs else float("nan")


def run_benchmark(machine, env, groups=range(3, 9), per_group=10, seed=0, budget=120.0, motion_factory=None,
                  r_c=None, diameter=0.0016, progress=None):
    """Plan every random instance and collect a report.

    ``motion_factory(problem)`` may return a motion oracle for each instance.
    """
    r_c = machine.center_radius if r_c is None else r_c
    report = BenchmarkReport(seed=seed, budget=budget)
    for n in groups:
        rng = np.random.default_rng([seed, n])
        results = []
        for k in range(per_group):
            bends = random_bend_set(n, rng, r_c, diameter)
            problem = BendingProblem(bends, machine, env)
            oracle = motion_factory(problem) if motion_factory else None
            t0 = time.perf_counter()
            res = prune_search(problem, oracle, budget)
            dt = time.perf_counter() - t0
            results.append(InstanceResult(n, k, res.status, dt, res.stats.nodes_explored,
                                          res.sequence.order if res.sequence else None))
            if progress:
                progress(results[-1])
        report.groups[n] = results
    return report


def default_machine():
    """Desk-scale machine placed in front of a robot at the world origin."""
    T = np.eye(4)
    # feed direction along world +y, so the held part points back toward the robot's side
    T[:3, :3] = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    T[:3, 3] = [0.32, 0.0, 0.13]
    return sim.MachineModel(frame=tuple(map(tuple, T)))
