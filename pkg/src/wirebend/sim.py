"""Kinematic simulator of the bending machine.

The wire is stored intrinsically: a total length plus a list of arcs, each
given by its start arclength, turn angle and bend direction ``psi`` in the
material frame. Straight wire fills the gaps. A rigid ``pose`` places the
material frame at arclength 0 in the world. Because every arc is attached
to the material, bending the same set of arcs in any order yields the same
intrinsic shape, and the arclength never changes.

Machine frame: origin on the centre-roller axis in the bending plane, x the
feed direction, z the roller axis. Bending counter-clockwise (seen from +z)
places the wire at ``y = -r_c``; clockwise at ``y = +r_c``.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
import math

import numpy as np

from . import kernels
from .bendset import ArcLayout
from .errors import DiameterTooLarge, TargetExceedsWorkRange, UnreachablePose
from .geometry import rotation_about

CHORD_TOL = 1e-4
BISECT_TOL = 1e-4
DEFAULT_CLEARANCE = 1e-3


class BendDirection(str, Enum):
    CW = "CW"
    CCW = "CCW"

    @property
    def side(self):
        """Sign of machine y toward which the wire turns."""
        return 1.0 if self is BendDirection.CCW else -1.0


# ---------------------------------------------------------------- bodies


@dataclass(frozen=True)
class Box:
    name: str
    center: tuple
    half: tuple
    rotation: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def distance(self, a0, a1):
        return kernels.segments_box_min(a0, a1, self.center, np.asarray(self.rotation), self.half)

    def transformed(self, T):
        R = T[:3, :3]
        return replace(
            self,
            center=tuple(R @ np.asarray(self.center) + T[:3, 3]),
            rotation=tuple(map(tuple, R @ np.asarray(self.rotation))),
        )

    def contains(self, p):
        local = (np.asarray(p) - self.center) @ np.asarray(self.rotation)
        return bool(np.all(np.abs(local) <= np.asarray(self.half)))


@dataclass(frozen=True)
class Capsule:
    name: str
    a: tuple
    b: tuple
    radius: float

    def distance(self, a0, a1):
        a0 = np.asarray(a0, dtype=float).reshape(-1, 3)
        if len(a0) == 0:
            return math.inf
        dummy = np.zeros((len(a0), 2))
        d = kernels.segments_segments_min(
            a0, a1, dummy, np.array([self.a], float), np.array([self.b], float), np.zeros((1, 2)), -1.0
        )
        return d - self.radius

    def transformed(self, T):
        R, t = T[:3, :3], T[:3, 3]
        return replace(self, a=tuple(R @ np.asarray(self.a) + t), b=tuple(R @ np.asarray(self.b) + t))

    def contains(self, p):
        a, b, p = np.asarray(self.a), np.asarray(self.b), np.asarray(p)
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
        return bool(np.linalg.norm(p - (a + t * ab)) <= self.radius)


@dataclass(frozen=True)
class HalfSpace:
    """Solid half-space below a plane (points with ``(p - point) . normal < 0``)."""

    name: str
    point: tuple
    normal: tuple

    def distance(self, a0, a1):
        return kernels.segments_halfspace_min(a0, a1, self.point, self.normal)

    def transformed(self, T):
        R, t = T[:3, :3], T[:3, 3]
        return replace(self, point=tuple(R @ np.asarray(self.point) + t), normal=tuple(R @ np.asarray(self.normal)))

    def contains(self, p):
        return float(np.dot(np.asarray(p) - self.point, self.normal)) <= 0.0


@dataclass(frozen=True)
class Environment:
    bodies: tuple = ()

    def distance(self, a0, a1):
        """Smallest surface distance from segments to any body (negative inside)."""
        if len(a0) == 0 or not self.bodies:
            return math.inf
        return min(b.distance(a0, a1) for b in self.bodies)

    def __add__(self, other):
        return Environment(tuple(self.bodies) + tuple(other.bodies))


# ---------------------------------------------------------------- machine


@dataclass(frozen=True)
class MachineModel:
    """Centre, punch and die roller geometry plus the static machine body.

    Defaults are plausible desk-scale values, not measurements of a real
    prototype.
    """

    center_radius: float = 0.006
    punch_radius: float = 0.006
    roller_gap: float = 0.004  # free space between centre and punch roller surfaces
    punch_limit: float = math.pi  # rotation from calibrated zero, each direction
    die_offset: float = 0.02  # die roller distance upstream of the bend point
    die_radius: float = 0.005
    roller_height: float = 0.015  # above the bending plane
    plane_clearance: float = 0.02  # bending plane height above the housing top
    housing_half: tuple = (0.06, 0.06)
    frame: tuple = tuple(map(tuple, np.eye(4)))  # machine frame in world
    table_height: float = 0.0

    @property
    def punch_orbit(self):
        return self.center_radius + self.roller_gap + self.punch_radius

    @property
    def T(self):
        return np.asarray(self.frame, dtype=float)

    def check_diameter(self, diameter):
        if diameter < 0:
            raise ValueError("diameter must be non-negative")
        if diameter >= self.roller_gap:
            raise DiameterTooLarge(
                f"wire diameter {diameter} does not fit the {self.roller_gap} roller gap"
            )

    def contact_angle(self, diameter):
        """Punch angle (from zero) at which it first touches a straight wire."""
        self.check_diameter(diameter)
        c = (self.center_radius + self.punch_radius + diameter / 2.0) / self.punch_orbit
        return math.acos(min(1.0, c))

    def thickness_loss(self, diameter):
        """Punch rotation reserved for the wire cross-section at the end stop."""
        return 2.0 * math.asin(min(1.0, diameter / (2.0 * self.punch_orbit)))

    def max_feasible_angle(self, diameter, direction=BendDirection.CCW):
        """Largest turn angle the punch can produce on a wire of ``diameter``."""
        self.check_diameter(diameter)
        return self.punch_limit - self.contact_angle(0.0) - self.thickness_loss(diameter)

    def required_punch_angle(self, turn, diameter):
        return turn + self.contact_angle(0.0) + self.thickness_loss(diameter)

    def punch_contact_distance(self, diameter):
        """Distance along a straight wire from the bend point to the punch contact."""
        return self.punch_orbit * math.sin(self.contact_angle(diameter))

    def bend_point(self, direction):
        """Machine-frame point where the wire leaves the straight feed line."""
        return np.array([0.0, -direction.side * self.center_radius, 0.0])

    def world(self, p):
        T = self.T
        return T[:3, :3] @ np.asarray(p, dtype=float) + T[:3, 3]

    def static_bodies(self):
        """Bodies the wire must never touch: the housing below the bending plane."""
        T = self.T
        top = -self.plane_clearance
        bottom = self.table_height - T[2, 3]  # table in machine z (frame assumed upright)
        hz = max((top - bottom) / 2.0, 1e-3)
        hx, hy = self.housing_half
        box = Box("housing", (0.0, 0.0, top - hz), (hx, hy, hz))
        return Environment((box.transformed(T),))

    def roller_bodies(self, punch_angle=0.0, direction=BendDirection.CCW):
        """Rollers as vertical capsules; used for gripper and mesh checks, not wire contact."""
        T = self.T
        lo, hi = -self.plane_clearance, self.roller_height
        s = direction.side
        pc = self.punch_orbit * np.array([math.sin(punch_angle), -s * math.cos(punch_angle), 0.0])
        dy = self.center_radius + self.roller_gap + self.die_radius
        bodies = [
            Capsule("center_roller", (0, 0, lo), (0, 0, hi), self.center_radius),
            Capsule("punch_roller", (pc[0], pc[1], lo), (pc[0], pc[1], hi), self.punch_radius),
            Capsule("die_roller_a", (-self.die_offset, dy, lo), (-self.die_offset, dy, hi), self.die_radius),
            Capsule("die_roller_b", (-self.die_offset, -dy, lo), (-self.die_offset, -dy, hi), self.die_radius),
        ]
        return Environment(tuple(b.transformed(T) for b in bodies))


def default_environment(machine, robot_base=(0.0, 0.0, 0.0), base_radius=0.065, base_height=0.1):
    """Table, machine housing and the robot base envelope."""
    table = HalfSpace("table", (0.0, 0.0, machine.table_height), (0.0, 0.0, 1.0))
    b = np.asarray(robot_base, dtype=float)
    base = Capsule("robot_base", tuple(b), tuple(b + [0, 0, base_height]), base_radius)
    return Environment((table, base)) + machine.static_bodies()


# ---------------------------------------------------------------- wire


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray
    s0: float
    s1: float

    @property
    def length(self):
        return float(np.linalg.norm(self.end - self.start))


@dataclass(frozen=True)
class Arc:
    center: np.ndarray
    axis: np.ndarray
    radius: float
    start_angle: float
    end_angle: float
    start_point: np.ndarray  # point at start_angle, fixes the angle reference
    s0: float
    s1: float

    @property
    def length(self):
        return self.radius * abs(self.end_angle - self.start_angle)

    def point(self, angle):
        R = rotation_about(self.axis, angle - self.start_angle)
        return self.center + R @ (self.start_point - self.center)


@dataclass(frozen=True)
class Placement:
    target: ArcLayout
    use_alpha: bool
    direction: BendDirection


@dataclass(frozen=True)
class WireState:
    length: float
    diameter: float
    r_c: float
    arcs: tuple = ()
    pose: tuple = tuple(map(tuple, np.eye(4)))
    placement: Placement = None

    # ---- construction
    @classmethod
    def straight(cls, length, diameter, r_c, pose=None):
        pose = np.eye(4) if pose is None else np.asarray(pose, dtype=float)
        return cls(float(length), float(diameter), float(r_c), (), tuple(map(tuple, pose)))

    @property
    def T(self):
        return np.asarray(self.pose, dtype=float)

    def with_pose(self, T, placement=None):
        return replace(self, pose=tuple(map(tuple, np.asarray(T, dtype=float))), placement=placement)

    # ---- intrinsic edits
    def with_arc(self, start, turn, psi, index=-1):
        """Insert an arc; it overrides any older arc sections it overlaps.

        Re-bending a location (same non-negative ``index``) replaces that
        location's arc outright, so each location keeps exactly one arc.
        """
        r = self.r_c
        end = start + r * turn
        if start < -1e-12 or end > self.length + 1e-12:
            raise ValueError("arc extends past the wire ends")
        out = []
        for a in self.arcs:
            if index >= 0 and a.index == index:
                continue
            a_end = a.start + r * a.turn
            if a_end <= start + 1e-12 or a.start >= end - 1e-12:
                out.append(a)
                continue
            if a.start < start:
                out.append(replace(a, turn=(start - a.start) / r))
            if a_end > end:
                out.append(replace(a, start=end, turn=(a_end - end) / r))
        out.append(ArcLayout(index, float(start), float(turn), float(psi)))
        out = [a for a in out if a.turn > 1e-12]
        out.sort(key=lambda a: a.start)
        return replace(self, arcs=tuple(out))

    # ---- local geometry
    @cached_property
    def _breaks(self):
        """(s, position, material frame) at every arc start and end, local coordinates."""
        P = np.zeros(3)
        M = np.eye(3)
        s = 0.0
        out = [(0.0, P, M)]
        for a in self.arcs:
            P = P + (a.start - s) * M[:, 0]
            out.append((a.start, P, M))
            k = math.cos(a.psi) * M[:, 1] + math.sin(a.psi) * M[:, 2]
            b = np.cross(M[:, 0], k)
            c = P + self.r_c * k
            R = rotation_about(b, a.turn)
            P = c + R @ (P - c)
            M = R @ M
            s = a.start + self.r_c * a.turn
            out.append((s, P, M))
        P = P + (self.length - s) * M[:, 0]
        out.append((self.length, P, M))
        return out

    def local_frame_at(self, s):
        """Local position and material frame at arclength ``s``."""
        breaks = self._breaks
        for i in range(0, len(breaks) - 1):
            s0, P0, M0 = breaks[i]
            s1 = breaks[i + 1][0]
            if s <= s1 + 1e-15 or i == len(breaks) - 2:
                if i % 2 == 0:  # straight piece
                    return P0 + (s - s0) * M0[:, 0], M0
                a = self.arcs[(i - 1) // 2]
                u = (s - s0) / self.r_c
                k = math.cos(a.psi) * M0[:, 1] + math.sin(a.psi) * M0[:, 2]
                b = np.cross(M0[:, 0], k)
                c = P0 + self.r_c * k
                R = rotation_about(b, u)
                return c + R @ (P0 - c), R @ M0
        raise AssertionError("unreachable")

    def frame_at(self, s):
        """World position and material frame at arclength ``s``."""
        P, M = self.local_frame_at(s)
        T = self.T
        return T[:3, :3] @ P + T[:3, 3], T[:3, :3] @ M

    def primitives(self):
        """World-frame segments and arcs, in arclength order."""
        T = self.T
        R, t = T[:3, :3], T[:3, 3]
        out = []
        breaks = self._breaks
        for i in range(len(breaks) - 1):
            s0, P0, M0 = breaks[i]
            s1, P1, _ = breaks[i + 1]
            if s1 - s0 <= 1e-12:
                continue
            if i % 2 == 0:
                out.append(Segment(R @ P0 + t, R @ P1 + t, s0, s1))
            else:
                a = self.arcs[(i - 1) // 2]
                k = math.cos(a.psi) * M0[:, 1] + math.sin(a.psi) * M0[:, 2]
                c = P0 + self.r_c * k
                out.append(Arc(R @ c + t, R @ np.cross(M0[:, 0], k), self.r_c, 0.0, a.turn, R @ P0 + t, s0, s1))
        return out

    @cached_property
    def _local_polyline(self):
        r = self.r_c
        step = 2.0 * math.acos(max(-1.0, 1.0 - CHORD_TOL / r)) if r > CHORD_TOL else math.pi / 2
        pts, ss = [], []
        breaks = self._breaks
        for i in range(len(breaks) - 1):
            s0, P0, M0 = breaks[i]
            s1 = breaks[i + 1][0]
            if i == 0 or not pts:
                pts.append(P0)
                ss.append(s0)
            if s1 - s0 <= 1e-12:
                continue
            if i % 2 == 0:
                pts.append(breaks[i + 1][1])
                ss.append(s1)
            else:
                a = self.arcs[(i - 1) // 2]
                n = max(1, int(math.ceil(a.turn / step)))
                k = math.cos(a.psi) * M0[:, 1] + math.sin(a.psi) * M0[:, 2]
                b = np.cross(M0[:, 0], k)
                c = P0 + r * k
                for j in range(1, n + 1):
                    u = a.turn * j / n
                    pts.append(c + rotation_about(b, u) @ (P0 - c))
                    ss.append(s0 + r * u)
        return np.array(pts), np.array(ss)

    def polyline(self):
        """World centreline points (arcs chorded at 0.1 mm sag) and their arclengths."""
        P, s = self._local_polyline
        T = self.T
        return P @ T[:3, :3].T + T[:3, 3], s

    def segments(self, s_min=-math.inf, s_max=math.inf):
        """Segment endpoint arrays and arclength intervals, clipped to [s_min, s_max]."""
        P, s = self.polyline()
        a0, a1, iv = P[:-1], P[1:], np.column_stack([s[:-1], s[1:]])
        if s_min > -math.inf or s_max < math.inf:
            lo = np.clip(np.maximum(iv[:, 0], s_min), iv[:, 0], iv[:, 1])
            hi = np.clip(np.minimum(iv[:, 1], s_max), iv[:, 0], iv[:, 1])
            keep = hi - lo > 1e-12
            span = np.where(iv[:, 1] - iv[:, 0] > 0, iv[:, 1] - iv[:, 0], 1.0)
            f0 = ((lo - iv[:, 0]) / span)[:, None]
            f1 = ((hi - iv[:, 0]) / span)[:, None]
            d = a1 - a0
            a0, a1 = (a0 + f0 * d)[keep], (a0 + f1 * d)[keep]
            iv = np.column_stack([lo, hi])[keep]
        return a0, a1, iv

    def straight_run(self, s, forward=True):
        """Length of straight wire from ``s`` to the next arc (or wire end)."""
        if forward:
            nxt = [a.start for a in self.arcs if a.start >= s - 1e-12]
            return (min(nxt) if nxt else self.length) - s
        prv = [a.start + self.r_c * a.turn for a in self.arcs if a.start + self.r_c * a.turn <= s + 1e-12]
        return s - (max(prv) if prv else 0.0)

    def arc_length_total(self):
        return sum(p.length for p in self.primitives())


# ---------------------------------------------------------------- operations


def _anchor_s(target, use_alpha, r_c):
    return target.start if use_alpha else target.start + r_c * target.turn


def pose_wire_for_bend(wire, target, machine, use_alpha=True, direction=BendDirection.CCW):
    """Place the wire so the bend starts on the machine's bend line.

    Alpha placement feeds the wire in its own direction and keeps the part
    before the bend fixed. Beta placement feeds it reversed and keeps the
    part after the bend fixed. In both, the wire is rolled about its axis
    so the bend direction points at the centre roller.
    """
    s_anchor = _anchor_s(target, use_alpha, wire.r_c)
    P, M = wire.local_frame_at(s_anchor)
    t = M[:, 0]
    k = math.cos(target.psi) * M[:, 1] + math.sin(target.psi) * M[:, 2]
    src = np.column_stack([t, k, np.cross(t, k)])
    Tm = machine.T
    X = Tm[:3, 0] if use_alpha else -Tm[:3, 0]
    S = direction.side * Tm[:3, 1]
    dst = np.column_stack([X, S, np.cross(X, S)])
    R = dst @ src.T
    B = machine.world(machine.bend_point(direction))
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = B - R @ P
    posed = wire.with_pose(T, Placement(target, use_alpha, direction))
    pts, _ = posed.polyline()
    if pts[:, 2].min() - wire.diameter / 2.0 < machine.table_height:
        raise UnreachablePose("placed wire dips below the table")
    return posed


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    reason: str = None

    def __bool__(self):
        return self.ok


def _moving_range(wire):
    pl = wire.placement
    r = wire.r_c
    if pl.use_alpha:
        return pl.target.start, wire.length
    return 0.0, pl.target.start + r * pl.target.turn


def check_contact_feasibility(wire, machine):
    """Whether the die roller and the punch roller can both reach the posed wire."""
    pl = wire.placement
    if pl is None:
        raise ValueError("wire is not posed for a bend")
    machine.check_diameter(wire.diameter)
    r = wire.r_c
    s_q = pl.target.start
    s_e = s_q + r * pl.target.turn
    if pl.use_alpha:
        fixed_run = wire.straight_run(s_q, forward=False)
        free_run = wire.straight_run(s_q, forward=True)
    else:
        fixed_run = wire.straight_run(s_e, forward=True)
        free_run = wire.straight_run(s_e, forward=False)
    if fixed_run < machine.die_offset:
        return Feasibility(False, "NoDieContact")
    if free_run >= machine.punch_contact_distance(wire.diameter):
        return Feasibility(True)
    if _punch_band_hit(wire, machine):
        return Feasibility(True)
    return Feasibility(False, "NoPunchContact")


def punch_band_test(points_machine, machine, diameter, direction, max_angle):
    """Mask of machine-frame points inside the region the punch sweeps up to ``max_angle``."""
    p = np.asarray(points_machine, dtype=float)
    s = direction.side
    rad = np.hypot(p[:, 0], p[:, 1])
    R = machine.punch_orbit
    band = np.abs(rad - R) <= machine.punch_radius + diameter / 2.0
    gamma = np.arctan2(p[:, 0], -s * p[:, 1])  # 0 below the roller, growing downstream
    height = (p[:, 2] <= machine.roller_height + diameter / 2.0) & (p[:, 2] >= -machine.plane_clearance)
    return band & height & (gamma >= 0.0) & (gamma <= max_angle)


def _punch_band_hit(wire, machine, step=5e-4):
    pl = wire.placement
    lo, hi = _moving_range(wire)
    a0, a1, _ = wire.segments(lo, hi)
    pts = []
    for p, q in zip(a0, a1):
        n = max(1, int(math.ceil(np.linalg.norm(q - p) / step)))
        pts.append(p + np.linspace(0.0, 1.0, n + 1)[:, None] * (q - p))
    if not pts:
        return False
    P = np.concatenate(pts)
    T = machine.T
    local = (P - T[:3, 3]) @ T[:3, :3]
    gmax = machine.contact_angle(wire.diameter) + pl.target.turn
    return bool(punch_band_test(local, machine, wire.diameter, pl.direction, gmax).any())


def wire_collides(wire, env, clearance=DEFAULT_CLEARANCE):
    """True if the wire's swept sphere comes within ``clearance`` of any body."""
    a0, a1, _ = wire.segments()
    return env.distance(a0, a1) - wire.diameter / 2.0 < clearance


def _partial(wire, u):
    """Posed wire after the punch has wound ``u`` of the target turn."""
    pl = wire.placement
    r = wire.r_c
    s_anchor = _anchor_s(pl.target, pl.use_alpha, r)
    start = pl.target.start if pl.use_alpha else s_anchor - r * u
    bent = wire.with_arc(start, u, pl.target.psi, pl.target.index)
    # keep the fixed side in place: the anchor frame must not move
    P_old, M_old = wire.local_frame_at(s_anchor)
    P_new, M_new = bent.local_frame_at(s_anchor)
    T = wire.T
    R = T[:3, :3] @ M_old @ M_new.T
    t = T[:3, :3] @ P_old + T[:3, 3] - R @ P_new
    Tn = np.eye(4)
    Tn[:3, :3] = R
    Tn[:3, 3] = t
    return bent.with_pose(Tn, pl)


def _clearance_margin(state, env, clearance):
    """Signed margin (>0 clear) of the moving part against env and the fixed wire."""
    pl = state.placement
    r = state.r_c
    lo, hi = _moving_range(state)
    s_q = pl.target.start
    window = math.pi * r + 2.0 * state.diameter
    if pl.use_alpha:
        arc_end = max((a.start + r * a.turn for a in state.arcs if abs(a.start - s_q) < 1e-12), default=s_q)
        mov = state.segments(arc_end, hi)
        fix = state.segments(-math.inf, s_q)
    else:
        s_e = s_q + r * pl.target.turn
        arc_start = min((a.start for a in state.arcs if abs(a.start + r * a.turn - s_e) < 1e-12), default=s_e)
        mov = state.segments(lo, arc_start)
        fix = state.segments(s_e, math.inf)
    m_env = env.distance(mov[0], mov[1]) - state.diameter / 2.0 - clearance
    m_self = math.inf
    if len(mov[0]) and len(fix[0]):
        m_self = kernels.segments_segments_min(mov[0], mov[1], mov[2], fix[0], fix[1], fix[2], window) - state.diameter
    return min(m_env, m_self)


def _motion_bound(wire, machine, u_max):
    """Upper bound on point speed per radian of winding for the moving part."""
    pts, s = wire.polyline()
    lo, hi = _moving_range(wire)
    sel = pts[(s >= lo - 1e-12) & (s <= hi + 1e-12)]
    if len(sel) == 0:
        return 1.0
    c = machine.world(np.zeros(3))
    return float(np.linalg.norm(sel - c, axis=1).max()) + wire.r_c * (1.0 + u_max)


@dataclass(frozen=True)
class BendOutcome:
    state: WireState
    achieved: float
    target: float
    contact: bool  # stopped early on environment or self contact


def simulate_bend(wire, target, direction, machine, env, use_alpha=True, clearance=DEFAULT_CLEARANCE,
                  max_step=math.radians(5.0)):
    """Wind the wire around the centre roller by the target turn angle.

    Stops early when the moving part first touches the environment or the
    fixed part of the wire. Contact is bracketed by conservative advancement
    and refined by bisection to 1e-4 rad.
    """
    if wire.placement is None or wire.placement.target != target or wire.placement.use_alpha != use_alpha \
            or wire.placement.direction != direction:
        wire = pose_wire_for_bend(wire, target, machine, use_alpha, direction)
    machine.check_diameter(wire.diameter)
    need = machine.required_punch_angle(target.turn, wire.diameter)
    if need > machine.punch_limit + 1e-12:
        raise TargetExceedsWorkRange(
            f"turn {math.degrees(target.turn):.2f} deg needs punch {math.degrees(need):.2f} deg"
        )
    goal = target.turn
    bound = _motion_bound(wire, machine, goal)
    u = 0.0
    margin = _clearance_margin(wire, env, clearance)
    if margin <= 0.0:
        return BendOutcome(wire, 0.0, goal, True)
    while True:
        step = min(max(margin / bound, BISECT_TOL), max_step)
        u_next = min(u + step, goal)
        m_next = _clearance_margin(_partial(wire, u_next), env, clearance)
        if m_next <= 0.0:
            lo, hi = u, u_next
            while hi - lo > BISECT_TOL:
                mid = 0.5 * (lo + hi)
                if _clearance_margin(_partial(wire, mid), env, clearance) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            return BendOutcome(_partial(wire, lo), lo, goal, True)
        u, margin = u_next, m_next
        if u >= goal:
            return BendOutcome(_partial(wire, goal), goal, goal, False)


def initial_wire(bends, pose=None):
    """Straight wire for a bend set."""
    return WireState.straight(bends.wire.total_length, bends.wire.diameter, bends.r_c, pose)


def final_shape(bends, lay):
    """Intrinsic shape with every bend applied."""
    w = initial_wire(bends)
    for a in lay:
        w = w.with_arc(a.start, a.turn, a.psi, a.index)
    return w
