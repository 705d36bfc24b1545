"""Independent re-simulation of a plan document."""
import numpy as np

from . import io, motion, sim
from .bendset import layout
from .errors import ConfigError, DivergenceFound
from .planner import CHOICES, Step, run_step

POSE_TOL = 1e-9


def _close(a, b, tol=POSE_TOL):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol))


def _check_wire(k, what, w, rec):
    if not _close(w.T, rec["pose"]):
        raise DivergenceFound(k, f"{what} wire pose differs from the recorded one")
    arcs = [[a.start, a.turn, a.psi, a.index] for a in w.arcs]
    if len(arcs) != len(rec["arcs"]) or not _close(arcs, rec["arcs"]):
        raise DivergenceFound(k, f"{what} wire arcs differ from the recorded ones")


def replay_plan(doc, resolution=motion.PATH_RESOLUTION):
    """Re-simulate every bend and re-check every trajectory waypoint.

    Raises DivergenceFound naming the first step that does not reproduce.
    """
    if doc.status != "success":
        raise ConfigError(f"plan status is {doc.status!r}; only successful plans can be replayed")
    bends = io.bendset_from_dict(doc.bends)
    machine = io.machine_from_dict(doc.machine)
    robot = io.robot_from_dict(doc.robot)
    env = sim.default_environment(machine, robot_base=tuple(np.asarray(robot.base)[:3, 3]))
    targets = layout(bends)
    if sorted(s["index"] for s in doc.steps) != list(range(len(targets))):
        raise DivergenceFound(0, "steps are not a permutation of the bends")
    state = sim.initial_wire(bends)
    posed, bent = [], []
    for k, rec in enumerate(doc.steps):
        st = Step(rec["index"], rec["choice"])
        if CHOICES[st.choice] != (rec["use_alpha"], sim.BendDirection(rec["direction"])):
            raise DivergenceFound(k, "recorded choice does not match its direction/placement fields")
        tgt = targets[st.index]
        if abs(tgt.turn - rec["turn"]) > POSE_TOL:
            raise DivergenceFound(k, "bend angle differs from the bending set")
        res = run_step(state, tgt, st, machine, env, doc.clearance)
        if not res.ok:
            raise DivergenceFound(k, f"step fails on re-simulation: {res.reason}")
        if abs(res.achieved - rec["achieved"]) > POSE_TOL:
            raise DivergenceFound(k, "achieved angle differs")
        _check_wire(k, "posed", res.posed, rec["posed"])
        _check_wire(k, "bent", res.bent, rec["bent"])
        posed.append(res.posed)
        bent.append(res.bent)
        state = state.with_arc(tgt.start, tgt.turn, tgt.psi, tgt.index)
    if doc.grasp is None:
        return True
    _replay_motion(doc, robot, env, machine, posed, bent, resolution)
    return True


def _replay_motion(doc, robot, env, machine, posed, bent, resolution):
    g = motion.GraspPose(**doc.grasp)
    n = len(posed)
    if len(doc.trajectories) != n:
        raise DivergenceFound(0, f"expected {n} trajectories, found {len(doc.trajectories)}")
    configs = []
    for k, rec in enumerate(doc.steps):
        q = np.asarray(rec.get("config"), float)
        if q.shape != (robot.dof,) or not robot.within_limits(q):
            raise DivergenceFound(k, "missing or out-of-limit joint configuration")
        if not motion.within_tolerance(robot, q, motion.grasp_transform(posed[k], g)):
            raise DivergenceFound(k, "configuration does not reach the grasp")
        configs.append(q)
    home = np.asarray(robot.home if robot.home is not None else np.zeros(robot.dof), float)
    scenes = {}
    for k, wp in enumerate(doc.trajectories):
        W = np.asarray(wp, float)
        start = home if k == 0 else configs[k - 1]
        if len(W) == 0 or not _close(W[0], start, 1e-12) or not _close(W[-1], configs[k], 1e-12):
            raise DivergenceFound(k, "trajectory endpoints do not match the held configurations")
        if len(W) > 1 and np.abs(np.diff(W, axis=0)).max() > resolution + 1e-12:
            raise DivergenceFound(k, "trajectory step exceeds the validation resolution")
        direction = posed[k].placement.direction
        if direction not in scenes:
            scenes[direction] = motion.scene_for(robot, env, machine, direction)
        held = None if k == 0 else motion.HeldWire.attach(bent[k - 1], g)
        for q in W:
            if not scenes[direction].config_clear(q, held):
                raise DivergenceFound(k, "trajectory waypoint in collision")
