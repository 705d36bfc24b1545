"""Bending-set extraction from a pivot chain, and its inverse.

Each interior pivot of a simplified curve becomes one bend candidate
``(q, theta, alpha, beta)`` expressed in the frame of the preceding bend:

* ``theta``: angle between the backward segment and the forward segment
  projected on the preceding frame's xy plane (pi means straight),
* ``q``: where the wire starts to wind on the centre roller,
* ``alpha``: twist of the forward segment about the incoming wire axis,
* ``beta``: lift of the forward segment out of the preceding xz plane.

``alpha`` and ``beta`` are redundant for the final shape; both are kept
because they lead to different wire placements in the machine.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DegenerateAngle, InconsistentAngles, TangentOverlap
from .geometry import (
    as_points,
    build_frame,
    compute_bend_normals,
    cross3,
    norm3,
    project_onto_plane,
    rotation_about,
    unit,
)

DEFAULT_MIN_BEND_ANGLE = math.radians(0.5)
# branch conditioning below which a reconstruction branch is not trusted
BRANCH_COND = 1e-3


@dataclass(frozen=True)
class WireSpec:
    diameter: float
    total_length: float

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError("wire diameter must be positive")
        if not self.total_length > 0:
            raise ValueError("wire length must be positive")


@dataclass(frozen=True)
class BendCandidate:
    index: int
    q: tuple  # bend start, coordinates in the predecessor frame (origin at predecessor pivot)
    theta: float
    alpha: float
    beta: float
    y_sign: int = 1  # side of the predecessor xz plane the wire turns to

    @property
    def turn(self):
        """Angle between incoming and outgoing wire directions."""
        d = outgoing_direction(self)
        return math.acos(max(-1.0, min(1.0, d[0])))

    @property
    def tangent_length(self):
        return tangent_length_theta(self.theta, 1.0)


@dataclass(frozen=True)
class BendSet:
    candidates: tuple
    r_c: float
    wire: WireSpec
    origin: tuple  # first pivot of the chain (wire start)
    first_direction: tuple  # unit direction of the first segment
    reference_normal: tuple  # z axis of the first bend's frame
    tail_length: float  # length of the last chain segment
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.r_c > 0:
            raise ValueError("centre roller radius must be positive")
        for i, c in enumerate(self.candidates):
            if c.index != i:
                raise ValueError("candidate indices must be contiguous from 0")

    def __len__(self):
        return len(self.candidates)

    def with_candidate(self, i, **changes):
        cands = list(self.candidates)
        cands[i] = replace(cands[i], **changes)
        return replace(self, candidates=tuple(cands))


@dataclass(frozen=True)
class PivotChain:
    pivots: np.ndarray
    normals: np.ndarray

    @classmethod
    def from_points(cls, points):
        pts = as_points(points)
        if len(pts) < 3:
            return cls(pts, np.zeros((0, 3)))
        return cls(pts, compute_bend_normals(pts))


def tangent_length_theta(theta, r_c):
    """Pivot-to-bend-start distance for interior angle ``theta``."""
    return r_c * math.tan((math.pi - theta) / 2.0)


def _turn_between(a, b):
    c = float(np.dot(unit(a), unit(b)))
    return math.acos(max(-1.0, min(1.0, c)))


def bend_angles(frame, forward):
    """theta, alpha, beta and y_sign of ``forward`` in ``frame``."""
    x, y, z = frame.x_axis, frame.y_axis, frame.z_axis
    v = np.asarray(forward, dtype=float)
    vn = norm3(v)
    v_xy = project_onto_plane(v, z)
    n_xy = norm3(v_xy)
    if n_xy <= 1e-12 * vn:
        raise DegenerateAngle("forward segment is normal to the preceding bend plane")
    # atan2 forms of the arccos definitions: same angles, no loss of precision near 0 and pi
    theta = math.atan2(abs(float(np.dot(v_xy, y))), float(np.dot(-x, v_xy)))
    if theta <= 1e-9:
        raise DegenerateAngle("wire folds back onto itself")
    v_yz = project_onto_plane(v, x)
    alpha = math.atan2(float(np.dot(v_yz, z)), float(np.dot(v_yz, y))) if norm3(v_yz) > 1e-12 * vn else 0.0
    v_xz = project_onto_plane(v, y)
    beta = math.atan2(float(np.dot(v_xz, z)), float(np.dot(v_xz, x))) if norm3(v_xz) > 1e-12 * vn else 0.0
    y_sign = 1 if np.dot(v, y) >= 0 else -1
    return theta, alpha, beta, y_sign


def _alpha_branch(theta, alpha):
    ca = math.cos(alpha)
    d = np.array([-math.cos(theta) * abs(ca), math.sin(theta) * ca, math.sin(theta) * math.sin(alpha)])
    return d, abs(ca) * math.sin(theta)


def _beta_branch(theta, beta, y_sign):
    ct, cb = math.cos(theta), math.cos(beta)
    cond = abs(ct) * abs(cb)
    if abs(cb) < 1e-15 or abs(ct) < 1e-15:
        return None, 0.0
    d = np.array([-ct, y_sign * math.sin(theta), -ct * math.tan(beta)])
    return d, cond


def outgoing_direction(cand, check=False):
    """Unit outgoing wire direction of a candidate in its predecessor frame.

    Uses the better-conditioned of the alpha and beta branches. With
    ``check`` set, both branches must agree where both are well posed.
    """
    da, ca = _alpha_branch(cand.theta, cand.alpha)
    db, cb = _beta_branch(cand.theta, cand.beta, cand.y_sign)
    if da is not None and norm3(da) > 0:
        da = da / norm3(da)
    if db is not None:
        db = db / norm3(db)
    if check and ca > BRANCH_COND and cb > BRANCH_COND:
        if norm3(da - db) > 1e-5:
            raise InconsistentAngles(
                f"bend {cand.index}: alpha and beta branches disagree by {norm3(da - db):.3g}"
            )
    if ca >= cb:
        if ca <= 0.0:
            raise DegenerateAngle(f"bend {cand.index}: direction not recoverable")
        return da
    return db


def _kept_pivots(pts, min_bend_angle):
    keep = [0]
    for i in range(1, len(pts) - 1):
        if _turn_between(pts[i] - pts[keep[-1]], pts[i + 1] - pts[i]) >= min_bend_angle:
            keep.append(i)
    keep.append(len(pts) - 1)
    return keep


def compute_bending_set(chain, r_c, wire, min_bend_angle=DEFAULT_MIN_BEND_ANGLE):
    """Bend candidates for every interior pivot turning at least ``min_bend_angle``."""
    if not isinstance(chain, PivotChain):
        chain = PivotChain.from_points(chain)
    pts = as_points(chain.pivots)
    if len(pts) < 2:
        raise ValueError("need at least 2 pivots")
    if not r_c > 0:
        raise ValueError("r_c must be positive")
    normals = np.asarray(chain.normals, dtype=float) if len(pts) >= 3 else np.zeros((0, 3))
    keep = _kept_pivots(pts, min_bend_angle)
    inner = keep[1:-1]
    x0 = unit(pts[keep[1]] - pts[0])
    if inner:
        ref0 = normals[inner[0] - 1]
    elif len(normals):
        ref0 = normals[0]
    else:
        ref0 = cross3(x0, [0.0, 0.0, 1.0])
        if norm3(ref0) < 1e-6:
            ref0 = cross3(x0, [0.0, 1.0, 0.0])
    ref0 = unit(ref0 - np.dot(ref0, x0) * x0)

    cands = []
    ref = ref0
    for k, i in enumerate(inner):
        p_prev, p_cur, p_next = pts[keep[k]], pts[i], pts[keep[k + 2]]
        x = unit(p_cur - p_prev)
        ref = unit(ref - np.dot(ref, x) * x)
        frame = build_frame(p_prev, p_cur, ref)
        theta, alpha, beta, y_sign = bend_angles(frame, p_next - p_cur)
        q_world = p_cur - tangent_length_theta(theta, r_c) * x
        q_local = frame.to_local(q_world - p_prev)
        cands.append(BendCandidate(k, tuple(float(c) for c in q_local), theta, alpha, beta, y_sign))
        ref = normals[i - 1]
    bs = BendSet(
        candidates=tuple(cands),
        r_c=float(r_c),
        wire=wire,
        origin=tuple(float(c) for c in pts[0]),
        first_direction=tuple(float(c) for c in x0),
        reference_normal=tuple(float(c) for c in ref0),
        tail_length=float(norm3(pts[-1] - pts[keep[-2]])),
    )
    check_overlap(bs)
    return bs


def reconstruct_pivots(bends, first_segment, check=True):
    """Inverse of :func:`compute_bending_set`.

    ``first_segment`` is ``(p0, p1)``; ``p1`` fixes the first incoming
    direction, the bend set's reference normal fixes the roll about it.
    Later segment lengths come from the stored bend start points, the last
    one from ``tail_length``.
    """
    p0, p1 = (np.asarray(p, dtype=float) for p in first_segment)
    pivots = [p0, p1]
    cands = bends.candidates
    if not cands:
        return np.array(pivots)
    x = unit(p1 - p0)
    z = np.asarray(bends.reference_normal, dtype=float)
    for k, cand in enumerate(cands):
        z = unit(z - np.dot(z, x) * x)
        frame = build_frame(pivots[-2], pivots[-1], z)
        d = frame.to_world(outgoing_direction(cand, check=check))
        if k + 1 < len(cands):
            nxt = cands[k + 1]
            length = nxt.q[0] + tangent_length_theta(nxt.theta, bends.r_c)
        else:
            length = bends.tail_length
        pivots.append(pivots[-1] + length * d)
        nz = cross3(x, d)
        z = unit(nz) if norm3(nz) > 1e-12 else z
        x = d
    return np.array(pivots)


def first_segment(bends):
    """Seed segment ``(p0, p1)`` stored in the bend set."""
    p0 = np.asarray(bends.origin, dtype=float)
    x = np.asarray(bends.first_direction, dtype=float)
    if not bends.candidates:
        return p0, p0 + bends.tail_length * x
    c0 = bends.candidates[0]
    return p0, p0 + (c0.q[0] + tangent_length_theta(c0.theta, bends.r_c)) * x


def chain_from_bends(bends, check=False):
    """World pivots of the bend set, seeded from its own first segment."""
    return reconstruct_pivots(bends, first_segment(bends), check=check)


@dataclass(frozen=True)
class ArcLayout:
    """Where a bend's arc sits along the finished wire.

    ``start`` is the arclength of the arc start, ``turn`` the physical turn
    angle, ``psi`` the bend direction measured in the parallel-transported
    material frame at ``start``.
    """

    index: int
    start: float
    turn: float
    psi: float

    def length(self, r_c):
        return r_c * self.turn

    def end(self, r_c):
        return self.start + r_c * self.turn


def layout(bends):
    """Arc positions of all bends on the finished (filleted) wire.

    The arc of each bend is tangent to both adjacent chain segments, so it
    starts ``r_c * tan(turn / 2)`` before the pivot.
    """
    r = bends.r_c
    pivots = chain_from_bends(bends)
    material = material_frame0(bends)
    out = []
    s = 0.0
    prev_tan = 0.0
    for k, cand in enumerate(bends.candidates):
        seg_in = pivots[k + 1] - pivots[k]
        x = unit(seg_in)
        d = unit(pivots[k + 2] - pivots[k + 1])
        turn = _turn_between(x, d)
        tan_len = r * math.tan(turn / 2.0)
        s += norm3(seg_in) - prev_tan - tan_len
        kvec = unit(d - np.dot(d, x) * x)
        psi = math.atan2(float(np.dot(kvec, material[:, 2])), float(np.dot(kvec, material[:, 1])))
        out.append(ArcLayout(k, float(s), float(turn), float(psi)))
        s += r * turn
        prev_tan = tan_len
        material = rotation_about(cross3(x, kvec), turn) @ material
    return out


def developed_length(bends):
    """Wire length needed for the filleted shape: straight runs plus arcs."""
    lay = layout(bends)
    if not lay:
        return float(bends.tail_length)
    last = lay[-1]
    return float(last.end(bends.r_c) + bends.tail_length - bends.r_c * math.tan(last.turn / 2.0))


def material_frame0(bends):
    """Material frame at the wire start: columns (tangent, n1, n2)."""
    x = np.asarray(bends.first_direction, dtype=float)
    z = np.asarray(bends.reference_normal, dtype=float)
    return np.column_stack([x, cross3(z, x), z])


def straight_runs(bends, lay=None):
    """Straight wire between consecutive arcs, including the lead and the tail."""
    lay = layout(bends) if lay is None else lay
    r = bends.r_c
    runs = []
    prev_end = 0.0
    for a in lay:
        runs.append(a.start - prev_end)
        prev_end = a.end(r)
    runs.append(bends.wire.total_length - prev_end)
    return runs


def flange_lengths(bends, wire=None):
    """Straight material before and after every bend on the finished wire.

    Values are not clipped: a negative length means the neighbouring arcs
    (or the wire end) eat into the bend's own arc.
    """
    if wire is not None and wire != bends.wire:
        bends = replace(bends, wire=wire)
    runs = straight_runs(bends)
    return [(runs[i], runs[i + 1]) for i in range(len(bends.candidates))]


def check_overlap(bends):
    """Raise TangentOverlap if the interior runs between arcs are negative.

    The wire tail is not checked here; a short wire shows up in
    :func:`flange_lengths`.
    """
    if not bends.candidates:
        return
    r = bends.r_c
    lay = layout(bends)
    prev_end = 0.0
    for a in lay:
        if a.start < prev_end - 1e-12:
            raise TangentOverlap(f"bend {a.index} starts before the previous arc ends")
        prev_end = a.end(r)
    last = lay[-1]
    if bends.tail_length < r * math.tan(last.turn / 2.0) - 1e-12:
        raise TangentOverlap("last segment shorter than the last bend's tangent")
