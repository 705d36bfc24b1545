"""Grasp reasoning and joint-space motion planning for carrying the wire.

The robot is a serial chain of revolute joints. Each joint applies a fixed
transform followed by a rotation about its own axis, so standard DH tables
and URDF-style chains both map onto it. Collision geometry is a set of
capsules per link plus gripper capsules in the tool frame.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
import math
import time
import zlib

import numpy as np

from . import kernels, sim
from .errors import CollidingEndpoint, NoSolution, PlanningTimeout

POS_TOL = 1e-4
ROT_TOL = 1e-3
IK_RESTARTS = 20
PATH_RESOLUTION = math.radians(0.5)
PLAN_TIMEOUT = 10.0


# ---------------------------------------------------------------- robot


def _tf(R=None, t=None):
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = R
    if t is not None:
        T[:3, 3] = t
    return T


def dh_transform(d, a, alpha):
    """Fixed part of a standard DH link: translate d on z, a on x, twist alpha about x."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([[1.0, 0, 0, a], [0, ca, -sa, 0], [0, sa, ca, d], [0, 0, 0, 1.0]])


@dataclass(frozen=True)
class LinkCapsule:
    """Capsule rigidly attached to the frame after joint ``link`` (0 is the base)."""

    link: int
    a: tuple
    b: tuple
    radius: float
    ignore: tuple = ()  # environment body names this capsule may touch


@dataclass(frozen=True)
class RobotModel:
    offsets: tuple  # per joint, 4x4 transform applied before the joint rotation
    axes: tuple  # per joint, rotation axis in its own frame
    lower: tuple
    upper: tuple
    base: tuple = tuple(map(tuple, np.eye(4)))
    tool: tuple = tuple(map(tuple, np.eye(4)))  # last joint frame to tool centre point
    capsules: tuple = ()
    gripper: tuple = ()  # capsules in the tool frame: (a, b, radius)
    home: tuple = None
    name: str = "robot"

    def __post_init__(self):
        n = len(self.axes)
        if len(self.offsets) != n or len(self.lower) != n or len(self.upper) != n:
            raise ValueError("joint tables have mismatched lengths")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("joint limits need lower < upper")
        object.__setattr__(self, "_off", np.array([np.asarray(o, float) for o in self.offsets]))
        object.__setattr__(self, "_ax", np.array([np.asarray(a, float) / np.linalg.norm(a) for a in self.axes]))
        object.__setattr__(self, "_lo", np.asarray(self.lower, float))
        object.__setattr__(self, "_hi", np.asarray(self.upper, float))
        object.__setattr__(self, "_base", np.asarray(self.base, float))
        object.__setattr__(self, "_tool", np.asarray(self.tool, float))
        K = np.array([[[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]] for x, y, z in self._ax])
        object.__setattr__(self, "_K", K)
        object.__setattr__(self, "_K2", K @ K)
        object.__setattr__(self, "_eye3", np.eye(3))

    @property
    def dof(self):
        return len(self.axes)

    def within_limits(self, q, tol=1e-9):
        q = np.asarray(q, float)
        return bool(np.all(q >= self._lo - tol) and np.all(q <= self._hi + tol))

    def reach(self):
        """Upper bound on the distance from the first joint to the tool point."""
        total = sum(float(np.linalg.norm(o[:3, 3])) for o in self._off[1:])
        return total + float(np.linalg.norm(self._tool[:3, 3]))

    def shoulder(self):
        return (self._base @ self._off[0])[:3, 3]

    def frames(self, q):
        """World transforms after each joint, plus the tool point transform."""
        q = np.asarray(q, float)
        sn, cs = np.sin(q)[:, None, None], np.cos(q)[:, None, None]
        G = np.zeros((self.dof, 4, 4))
        G[:, :3, :3] = self._eye3 + sn * self._K + (1.0 - cs) * self._K2
        G[:, 3, 3] = 1.0
        L = self._off @ G
        T = self._base
        out = []
        for Li in L:
            T = T @ Li
            out.append(T)
        return out, T @ self._tool

    def fk(self, q):
        return self.frames(q)[1]

    def jacobian(self, q):
        frames, tcp = self.frames(q)
        p = tcp[:3, 3]
        F = np.array(frames)
        z = np.einsum("nij,nj->ni", F[:, :3, :3], self._ax)
        r = p - F[:, :3, 3]
        lin = np.stack([z[:, 1] * r[:, 2] - z[:, 2] * r[:, 1],
                        z[:, 2] * r[:, 0] - z[:, 0] * r[:, 2],
                        z[:, 0] * r[:, 1] - z[:, 1] * r[:, 0]], axis=1)
        return np.vstack([lin.T, z.T]), tcp

    def link_capsules(self, q, frames=None):
        """World-frame link capsules as (a, b, radius, ignore) tuples."""
        if frames is None:
            frames, _ = self.frames(q)
        out = []
        for c in self.capsules:
            F = self._base if c.link == 0 else frames[c.link - 1]
            R, t = F[:3, :3], F[:3, 3]
            out.append((R @ np.asarray(c.a) + t, R @ np.asarray(c.b) + t, c.radius, c.ignore))
        return out

    def gripper_capsules(self, tcp):
        R, t = tcp[:3, :3], tcp[:3, 3]
        return [(R @ np.asarray(a) + t, R @ np.asarray(b) + t, r) for a, b, r in self.gripper]

    def random_config(self, rng):
        return rng.uniform(self._lo, self._hi)


# defaults approximate a two-finger parallel gripper; not measured values
GRIPPER_LENGTH = 0.14


def default_gripper(finger_gap=0.003, finger_radius=0.004):
    y = finger_gap / 2.0 + finger_radius
    L = GRIPPER_LENGTH
    return (
        ((0.0, 0.0, -L), (0.0, 0.0, -0.06), 0.035),  # body
        ((0.0, -0.03, -0.05), (0.0, 0.03, -0.05), 0.012),  # palm bar
        ((0.0, -y, -0.045), (0.0, -y, -0.012), finger_radius),
        ((0.0, y, -0.045), (0.0, y, -0.012), finger_radius),
    )


def ur3e(base=None, gripper=None):
    """UR3e kinematics from its published DH table, with a parallel gripper."""
    d = (0.15185, 0.0, 0.0, 0.13105, 0.08535, 0.0921)
    a = (0.0, -0.24355, -0.2132, 0.0, 0.0, 0.0)
    al = (math.pi / 2, 0.0, 0.0, math.pi / 2, -math.pi / 2, 0.0)
    fixed = [dh_transform(d[i], a[i], al[i]) for i in range(6)]
    offsets = [np.eye(4)] + fixed[:5]
    tool = fixed[5] @ _tf(t=(0.0, 0.0, GRIPPER_LENGTH))
    tt = lambda M: tuple(map(tuple, M))
    floor = ("table", "robot_base")
    caps = (
        LinkCapsule(1, (0, 0, 0), (0, 0, d[0]), 0.045, floor),
        LinkCapsule(2, (0, 0, 0), (a[1], 0, 0), 0.04, ("robot_base",)),
        LinkCapsule(3, (0, 0, 0), (a[2], 0, 0), 0.035),
        LinkCapsule(4, (0, 0, 0), (0, 0, d[3]), 0.032),
        LinkCapsule(5, (0, 0, 0), (0, 0, d[4]), 0.032),
    )
    lim = 2.0 * math.pi
    return RobotModel(
        offsets=tuple(tt(o) for o in offsets),
        axes=((0.0, 0.0, 1.0),) * 6,
        lower=(-lim, -lim, -math.pi, -lim, -lim, -lim),
        upper=(lim, lim, math.pi, lim, lim, lim),
        base=tt(np.eye(4) if base is None else base),
        tool=tt(tool),
        capsules=caps,
        gripper=default_gripper() if gripper is None else tuple(gripper),
        # elbow up, tool pointing down, facing the workspace in front of the base
        home=(2.37, -math.pi / 2, math.pi / 2, -math.pi / 2, -math.pi / 2, 0.0),
        name="ur3e",
    )


# ---------------------------------------------------------------- kinematics


def pose_error(T, target):
    """Position error vector and rotation vector taking ``T`` onto ``target``."""
    return target[:3, 3] - T[:3, 3], kernels.rotation_log(target[:3, :3] @ T[:3, :3].T)


def within_tolerance(robot, q, target, pos_tol=POS_TOL, rot_tol=ROT_TOL):
    dp, w = pose_error(robot.fk(q), np.asarray(target, float))
    return bool(np.linalg.norm(dp) <= pos_tol and np.linalg.norm(w) <= rot_tol)


def _dls(robot, target, q, iters=150, damping=0.02, pos_tol=POS_TOL, rot_tol=ROT_TOL, patience=25):
    q, ok = kernels.dls_solve(robot._off, robot._ax, robot._base, robot._tool, robot._lo, robot._hi, target, q,
                              iters, damping, pos_tol, rot_tol, patience)
    return q, ok or within_tolerance(robot, q, target, pos_tol, rot_tol)


def solve_ik(robot, target, seed=None, restarts=IK_RESTARTS, rng=None, accept=None):
    """Joint configuration whose tool pose matches ``target``.

    Starts from ``seed`` (home if omitted), then from ``restarts`` random
    configurations drawn from ``rng``. ``accept(q)`` may reject solutions,
    for example ones in collision. Raises NoSolution when nothing fits.
    """
    target = np.asarray(target, float)
    if target.shape != (4, 4) or not np.all(np.isfinite(target)):
        raise ValueError("target must be a finite 4x4 transform")
    if np.linalg.norm(target[:3, 3] - robot.shoulder()) > robot.reach() + POS_TOL:
        raise NoSolution("target is beyond the robot's reach")
    if rng is None:
        rng = np.random.default_rng(0)
    seeds = []
    if seed is not None:
        seed = np.asarray(seed, float)
        if not robot.within_limits(seed):
            raise ValueError("seed is outside the joint limits")
        seeds.append(seed)
    elif robot.home is not None:
        seeds.append(np.asarray(robot.home, float))
    randoms = [robot.random_config(rng) for _ in range(restarts)]
    for q0 in seeds + randoms:
        q, ok = _dls(robot, target, q0.copy())
        if ok and robot.within_limits(q) and (accept is None or accept(q)):
            return q
    raise NoSolution(f"no joint solution after {restarts} restarts")


# ---------------------------------------------------------------- grasps


class GraspVerdict(str, Enum):
    AVAILABLE = "Available"
    COLLIDED = "Collided"
    IK_INFEASIBLE = "IkInfeasible"


@dataclass(frozen=True)
class GraspPose:
    """Grasp at arclength ``s`` with the approach rolled ``roll`` about the wire.

    The tool frame has its origin on the wire centreline, x along the wire
    tangent and z along the approach direction (from gripper to wire).
    """

    id: int
    s: float
    roll: float
    jaw_width: float = 0.01
    footprint: float = 0.012  # wire length covered by the fingers

    def validate(self, wire_length, diameter):
        if not 0.0 <= self.s <= wire_length:
            raise ValueError(f"grasp {self.id} lies outside the wire")
        if self.jaw_width < diameter:
            raise ValueError(f"grasp {self.id} jaw is narrower than the wire")


def default_grasps(wire_length, positions=6, rolls=8, margin=0.015, jaw_width=0.01):
    """Evenly spaced positions along the wire times evenly spaced approach rolls."""
    lo, hi = margin, wire_length - margin
    ss = [lo + (hi - lo) * (i + 0.5) / positions for i in range(positions)] if hi > lo else [wire_length / 2]
    out = []
    for s in ss:
        for k in range(rolls):
            out.append(GraspPose(len(out), float(s), 2.0 * math.pi * k / rolls, jaw_width))
    return tuple(out)


def grasp_transform(wire, g):
    """World tool-point transform for grasp ``g`` on a posed wire."""
    P, M = wire.frame_at(g.s)
    t = M[:, 0]
    a = math.cos(g.roll) * M[:, 1] + math.sin(g.roll) * M[:, 2]
    T = np.eye(4)
    T[:3, :3] = np.column_stack([t, np.cross(a, t), a])
    T[:3, 3] = P
    return T


def fixed_range(wire):
    """Arclength interval of the wire that stays put during the placed bend."""
    pl = wire.placement
    if pl is None:
        return 0.0, wire.length
    if pl.use_alpha:
        return 0.0, pl.target.start
    return pl.target.start + wire.r_c * pl.target.turn, wire.length


# ---------------------------------------------------------------- collision scene


def pack_bodies(bodies):
    """Flatten collision bodies into the (kinds, params) layout of the kernels."""
    kinds = np.zeros(len(bodies), dtype=np.int64)
    params = np.zeros((len(bodies), 15))
    for j, b in enumerate(bodies):
        if isinstance(b, sim.HalfSpace):
            kinds[j] = 0
            params[j, :6] = (*b.point, *b.normal)
        elif isinstance(b, sim.Capsule):
            kinds[j] = 1
            params[j, :7] = (*b.a, *b.b, b.radius)
        elif isinstance(b, sim.Box):
            kinds[j] = 2
            params[j, :3] = b.center
            params[j, 3:12] = np.asarray(b.rotation, float).ravel()
            params[j, 12:] = b.half
        else:
            raise TypeError(f"unsupported body {type(b).__name__}")
    return kinds, params


class MotionScene:
    """Static scene for one robot: the environment plus obstacles only the robot sees."""

    def __init__(self, robot, env, robot_only=None, clearance=0.0):
        self.robot = robot
        self.env = env
        self.robot_env = env + (robot_only or sim.Environment())
        self.clearance = clearance
        bodies = self.robot_env.bodies
        self._kinds, self._params = pack_bodies(bodies)
        self._wire_kinds, self._wire_params = pack_bodies(env.bodies)
        self._link_mask = np.array([[b.name not in c.ignore for b in bodies] for c in robot.capsules],
                                   dtype=np.uint8).reshape(len(robot.capsules), len(bodies))
        self._grip_mask = np.ones((len(robot.gripper), len(bodies)), dtype=np.uint8)
        self._link_r = np.array([c.radius for c in robot.capsules], float)
        self._grip_r = np.array([r for _, _, r in robot.gripper], float)

    def gripper_clear(self, tcp, wire=None, exclude=None):
        """Gripper capsules against the scene and, optionally, the wire outside ``exclude``."""
        if not len(self._grip_r):
            return True
        R, t = tcp[:3, :3], tcp[:3, 3]
        A = np.array([a for a, _, _ in self.robot.gripper], float) @ R.T + t
        B = np.array([b for _, b, _ in self.robot.gripper], float) @ R.T + t
        if not kernels.capsules_clear(A, B, self._grip_r, self._grip_mask, self._kinds, self._params,
                                      self.clearance):
            return False
        if wire is not None:
            w0, w1 = _wire_segments_outside(wire, exclude)
            return kernels.capsules_segments_clear(A, B, self._grip_r, w0, w1, wire.diameter / 2.0, self.clearance)
        return True

    def arm_clear(self, q, frames=None, wire_segs=None, wire_radius=0.0):
        caps = self.robot.link_capsules(q, frames)
        if not caps:
            return True
        A = np.array([c[0] for c in caps])
        B = np.array([c[1] for c in caps])
        if not kernels.capsules_clear(A, B, self._link_r, self._link_mask, self._kinds, self._params,
                                      self.clearance):
            return False
        if wire_segs is not None:
            return kernels.capsules_segments_clear(A, B, self._link_r, wire_segs[0], wire_segs[1], wire_radius,
                                                   self.clearance)
        return True

    def wire_clear(self, a0, a1, radius):
        """Held wire against the environment (rollers excluded: the wire threads them)."""
        n = len(a0)
        if n == 0:
            return True
        return kernels.capsules_clear(a0, a1, np.full(n, radius), np.ones((n, len(self._wire_kinds)), np.uint8),
                                      self._wire_kinds, self._wire_params, self.clearance)

    def config_clear(self, q, held=None):
        """Whole robot (and held wire) collision-free at configuration ``q``."""
        frames, tcp = self.robot.frames(q)
        if not self.arm_clear(q, frames, *(held.arm_view(tcp) if held else (None, 0.0))):
            return False
        if held is None:
            return self.gripper_clear(tcp)
        if not self.gripper_clear(tcp):
            return False
        a0, a1 = held.world(tcp)
        return self.wire_clear(a0, a1, held.radius)


def _wire_segments_outside(wire, exclude):
    a0, a1, iv = wire.segments()
    if exclude is None:
        return a0, a1
    lo, hi = exclude
    keep_lo = wire.segments(-math.inf, lo)
    keep_hi = wire.segments(hi, math.inf)
    return np.vstack([keep_lo[0], keep_hi[0]]), np.vstack([keep_lo[1], keep_hi[1]])


@dataclass
class HeldWire:
    """Wire rigidly attached to the tool point, stored in tool coordinates."""

    a0: np.ndarray
    a1: np.ndarray
    radius: float
    arm_a0: np.ndarray = None  # subset checked against the arm links (outside the fingers)
    arm_a1: np.ndarray = None

    @classmethod
    def attach(cls, wire, g):
        T = grasp_transform(wire, g)
        inv = np.linalg.inv(T)
        R, t = inv[:3, :3], inv[:3, 3]
        a0, a1, _ = wire.segments()
        b0, b1 = _wire_segments_outside(wire, (g.s - g.footprint, g.s + g.footprint))
        return cls(a0 @ R.T + t, a1 @ R.T + t, wire.diameter / 2.0, b0 @ R.T + t, b1 @ R.T + t)

    def world(self, tcp):
        R, t = tcp[:3, :3], tcp[:3, 3]
        return self.a0 @ R.T + t, self.a1 @ R.T + t

    def arm_view(self, tcp):
        R, t = tcp[:3, :3], tcp[:3, 3]
        return (self.arm_a0 @ R.T + t, self.arm_a1 @ R.T + t), self.radius


def scene_for(robot, env, machine=None, direction=sim.BendDirection.CCW, clearance=0.0):
    extra = machine.roller_bodies(0.0, direction) if machine is not None else None
    return MotionScene(robot, env, extra, clearance)


# ---------------------------------------------------------------- classification


def classify_grasp(g, wire_pose, robot, env, rng=None, scene=None, after=None, seed_config=None):
    """Verdict for holding ``wire_pose`` with grasp ``g``.

    ``after`` is an optional second state of the same placement (the wire
    once bent); the gripper and arm must clear it too. Returns the verdict
    and the joint configuration when available.
    """
    scene = scene or MotionScene(robot, env)
    lo, hi = fixed_range(wire_pose)
    if g.s - g.footprint < lo - 1e-12 or g.s + g.footprint > hi + 1e-12:
        return GraspVerdict.COLLIDED, None  # the fingers would ride on the moving part
    tcp = grasp_transform(wire_pose, g)
    excl = (g.s - g.footprint, g.s + g.footprint)
    if not scene.gripper_clear(tcp, wire_pose, excl):
        return GraspVerdict.COLLIDED, None
    if after is not None and not scene.gripper_clear(grasp_transform(after, g), after, excl):
        return GraspVerdict.COLLIDED, None
    held = HeldWire.attach(wire_pose, g)
    held_after = HeldWire.attach(after, g) if after is not None else None

    def accept(q):
        if not scene.config_clear(q, held):
            return False
        return held_after is None or scene.arm_clear(q, None, *held_after.arm_view(robot.fk(q)))

    try:
        q = solve_ik(robot, tcp, seed_config, rng=rng if rng is not None else np.random.default_rng(g.id),
                     accept=accept)
    except NoSolution:
        return GraspVerdict.IK_INFEASIBLE, None
    return GraspVerdict.AVAILABLE, q


def common_grasps(verdicts):
    """Grasp ids Available in every per-pose verdict table."""
    verdicts = list(verdicts)
    if not verdicts:
        raise ValueError("need at least one wire pose")
    out = None
    for table in verdicts:
        ok = {gid for gid, v in table.items() if v == GraspVerdict.AVAILABLE}
        out = ok if out is None else out & ok
    return out


# ---------------------------------------------------------------- joint-space planning


@dataclass
class Trajectory:
    waypoints: np.ndarray
    max_step: float = PATH_RESOLUTION

    def __len__(self):
        return len(self.waypoints)


def densify(path, resolution=PATH_RESOLUTION):
    """Insert waypoints so no joint moves more than ``resolution`` between neighbours."""
    out = [np.asarray(path[0], float)]
    for a, b in zip(path[:-1], path[1:]):
        a, b = np.asarray(a, float), np.asarray(b, float)
        k = max(1, int(math.ceil(np.abs(b - a).max() / resolution - 1e-12)))
        for j in range(1, k + 1):
            out.append(a + (b - a) * (j / k))
    return np.array(out)


def _edge_clear(check, a, b, resolution):
    pts = densify([a, b], resolution)
    # coarse-to-fine order finds collisions earlier on average
    n = len(pts)
    order = sorted(range(1, n), key=lambda i: (bin(i)[::-1], i)) if n > 2 else range(1, n)
    return all(check(pts[i]) for i in order)


def plan_joint_path(robot, start, goal, attached_wire=None, env=None, scene=None, rng=None,
                    timeout=PLAN_TIMEOUT, max_iters=600, step=0.3, resolution=PATH_RESOLUTION,
                    clock=time.perf_counter):
    """Collision-free joint path from ``start`` to ``goal`` (bidirectional RRT).

    ``attached_wire`` is a HeldWire carried rigidly by the tool. The direct
    straight-line path is tried first. Raises CollidingEndpoint if either
    end is in collision and PlanningTimeout when the budget runs out.
    """
    scene = scene or MotionScene(robot, env or sim.Environment())
    rng = rng if rng is not None else np.random.default_rng(0)
    start, goal = np.asarray(start, float), np.asarray(goal, float)
    check = lambda q: scene.config_clear(q, attached_wire)
    if not check(start) or not check(goal):
        raise CollidingEndpoint("start or goal configuration is in collision")
    if np.array_equal(start, goal):
        return Trajectory(start[None].copy(), resolution)
    if _edge_clear(check, start, goal, resolution):
        return Trajectory(densify([start, goal], resolution), resolution)
    t0 = clock()
    trees = [([start], [-1]), ([goal], [-1])]

    def extend(tree, target):
        nodes, parents = tree
        arr = np.array(nodes)
        i = int(np.argmin(np.abs(arr - target).max(axis=1)))
        near = arr[i]
        d = target - near
        m = np.abs(d).max()
        new = target if m <= step else near + d * (step / m)
        if not robot.within_limits(new) or not check(new) or not _edge_clear(check, near, new, resolution):
            return None
        nodes.append(new)
        parents.append(i)
        return len(nodes) - 1

    def connect(tree, target):
        while True:
            j = extend(tree, target)
            if j is None:
                return None
            if np.abs(tree[0][j] - target).max() < 1e-12:
                return j

    def branch(tree, j):
        out = []
        while j >= 0:
            out.append(tree[0][j])
            j = tree[1][j]
        return out

    for it in range(max_iters):
        if clock() - t0 > timeout:
            raise PlanningTimeout(f"no path within {timeout} s")
        a, b = trees[it % 2], trees[(it + 1) % 2]
        sample = goal if (a is trees[0] and rng.random() < 0.1) else robot.random_config(rng)
        j = extend(a, sample)
        if j is None:
            continue
        k = connect(b, a[0][j])
        if k is None:
            continue
        pa, pb = branch(a, j), branch(b, k)
        path = pa[::-1] + pb[1:] if a is trees[0] else pb[::-1] + pa[1:]
        path = _shortcut(path, check, rng, resolution)
        return Trajectory(densify(path, resolution), resolution)
    raise PlanningTimeout(f"no path after {max_iters} iterations")


def _shortcut(path, check, rng, resolution, rounds=30):
    path = list(path)
    for _ in range(rounds):
        if len(path) <= 2:
            break
        i, j = sorted(rng.choice(len(path), 2, replace=False))
        if j - i < 2:
            continue
        if _edge_clear(check, path[i], path[j], resolution):
            path = path[: i + 1] + path[j:]
    return path


# ---------------------------------------------------------------- manipulation


@dataclass
class MotionResult:
    ok: bool
    fail_step: int = None
    reason: str = None
    grasp: int = None
    configs: list = field(default_factory=list)  # joint configuration held at each step
    trajectories: list = field(default_factory=list)  # pick, then one transfer per later step
    verdicts: list = field(default_factory=list)  # per step: {grasp id: verdict}


def _query_seed(seed, *parts):
    return np.random.default_rng([seed, zlib.crc32(repr(parts).encode())])


class ManipulationPlanner:
    """Common-grasp search and transfer planning over a sequence of wire poses.

    Per-pose verdicts and per-transfer trajectories are cached by caller
    supplied keys so repeated sequence prefixes are never re-planned.
    """

    def __init__(self, robot, env, grasps, machine=None, seed=0, clearance=0.0, timeout=PLAN_TIMEOUT):
        self.robot = robot
        self.env = env
        self.grasps = tuple(grasps)
        self.machine = machine
        self.seed = seed
        self.timeout = timeout
        self.clearance = clearance
        self._scenes = {}
        self._verdicts = {}
        self._paths = {}

    def scene(self, direction):
        if direction not in self._scenes:
            self._scenes[direction] = scene_for(self.robot, self.env, self.machine, direction, self.clearance)
        return self._scenes[direction]

    def verdict(self, key, posed, bent, g):
        ck = (key, g.id)
        if ck not in self._verdicts:
            direction = posed.placement.direction if posed.placement else sim.BendDirection.CCW
            self._verdicts[ck] = classify_grasp(
                g, posed, self.robot, self.env, _query_seed(self.seed, "ik", key, g.id), self.scene(direction),
                bent)
        return self._verdicts[ck]

    def transfer(self, key, start, goal, held, direction):
        ck = key
        if ck not in self._paths:
            try:
                tr = plan_joint_path(self.robot, start, goal, held, scene=self.scene(direction),
                                     rng=_query_seed(self.seed, "path", key), timeout=self.timeout)
            except (PlanningTimeout, CollidingEndpoint) as exc:
                tr = exc
            self._paths[ck] = tr
        return self._paths[ck]

    def plan(self, poses, keys=None):
        """Plan a whole sequence.

        ``poses`` lists ``(posed, bent)`` wire pairs, one per step. The robot
        picks the wire at the first pose, stays still while each bend runs,
        and carries the wire to the next pose in between.
        """
        poses = list(poses)
        if not poses:
            raise ValueError("need at least one wire pose")
        keys = list(keys) if keys is not None else [("pose", i) for i in range(len(poses))]
        if not self.grasps:
            return MotionResult(False, 0, "NoCommonGrasp: no grasp annotations")
        n = len(poses)
        depth = {}
        tables = []
        alive = [g for g in self.grasps]
        for k, (posed, bent) in enumerate(poses):
            table = {}
            for g in self.grasps:
                if g.id in depth:
                    continue
                v, _ = self.verdict(keys[k], posed, bent, g)
                table[g.id] = v
                if v != GraspVerdict.AVAILABLE:
                    depth[g.id] = k
            tables.append(table)
            alive = [g for g in alive if g.id not in depth]
            if not alive:
                return MotionResult(False, max(depth.values()), "NoCommonGrasp", verdicts=tables)
        home = np.asarray(self.robot.home if self.robot.home is not None else np.zeros(self.robot.dof), float)
        for g in alive:
            configs = [self.verdict(keys[k], p, b, g)[1] for k, (p, b) in enumerate(poses)]
            trajs = []
            d0 = poses[0][0].placement.direction if poses[0][0].placement else sim.BendDirection.CCW
            first = self.transfer(("pick", keys[0], g.id), home, configs[0], None, d0)
            if isinstance(first, Exception):
                depth[g.id] = 0
                continue
            trajs.append(first)
            failed = None
            for k in range(1, n):
                held = HeldWire.attach(poses[k - 1][1], g)
                direction = poses[k][0].placement.direction if poses[k][0].placement else sim.BendDirection.CCW
                tr = self.transfer(("move", keys[k - 1], keys[k], g.id), configs[k - 1], configs[k], held,
                                   direction)
                if isinstance(tr, Exception):
                    failed = k
                    break
                trajs.append(tr)
            if failed is None:
                return MotionResult(True, None, None, g.id, configs, trajs, tables)
            depth[g.id] = failed
        return MotionResult(False, max(depth.values()), "MotionFail", verdicts=tables)


def plan_manipulation(poses, grasps, robot, env, machine=None, seed=0, keys=None):
    """Functional wrapper: first common grasp that completes every motion."""
    return ManipulationPlanner(robot, env, grasps, machine, seed).plan(poses, keys)


def motion_oracle(robot, env, grasps, machine=None, seed=0):
    """Adapter for the sequence planner: ``oracle(seq, steps)`` -> MotionResult."""
    mp = ManipulationPlanner(robot, env, grasps, machine, seed)

    def oracle(seq, steps):
        keys = []
        done = []
        for st in seq.steps:
            keys.append((frozenset(done), st.key()))
            done.append(st.index)
        return mp.plan([(s.posed, s.bent) for s in steps], keys)

    oracle.planner = mp
    return oracle
