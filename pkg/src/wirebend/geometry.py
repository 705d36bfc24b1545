"""3D geometry primitives: polyline simplification, bend normals, local frames.

All lengths are meters and all angles radians.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import kernels
from .errors import (
    DegenerateSegment,
    EmptyCurve,
    NonFinite,
    NonOrthogonalNormal,
    TooFewPoints,
)

# a pivot is treated as collinear below this fraction of |a||b|
COLLINEAR_TOL = 1e-9


def as_points(points):
    """Return ``points`` as a finite float (N, 3) array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("curve contains non-finite coordinates")
    return arr


def norm3(v):
    """Euclidean length of one vector; cheaper than np.linalg.norm on tiny inputs."""
    return math.sqrt(float(np.dot(v, v)))


def cross3(a, b):
    """Cross product of two 3-vectors; np.cross has a large fixed overhead."""
    return np.array((a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]))


def unit(v):
    v = np.asarray(v, dtype=float)
    n = norm3(v)
    if n == 0.0:
        raise DegenerateSegment("cannot normalise a zero vector")
    return v / n


def rotation_about(axis, angle):
    """Rotation matrix for a right-handed turn of ``angle`` about ``axis``."""
    x, y, z = unit(axis)
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array([
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
    ])


def rdp_simplify(curve, epsilon):
    """Simplify a dense curve with the Ramer-Douglas-Peucker algorithm.

    Returns the kept points, a subsequence of ``curve`` that includes both
    endpoints. Every dropped point lies within ``epsilon`` of the result.
    """
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise EmptyCurve("a curve needs at least 2 points")
    pts = as_points(pts)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    keep = kernels.rdp_keep(pts, float(epsilon))
    return pts[keep]


def _fallback_normal(direction):
    d = unit(direction)
    for e in np.eye(3):
        r = e - np.dot(e, d) * d
        if np.linalg.norm(r) > 1e-6:
            return unit(r)
    raise DegenerateSegment("no basis vector is independent of the segment")


def compute_bend_normals(pivots):
    """Unit bend-plane normal at every interior pivot.

    Collinear pivots take the previous valid normal; leading collinear
    pivots take the first valid one. A fully straight chain gets the first
    canonical axis that is not parallel to the first segment.
    """
    pts = as_points(pivots)
    if len(pts) < 3:
        raise TooFewPoints("need at least 3 pivots for bend normals")
    seg = np.diff(pts, axis=0)
    lens = np.linalg.norm(seg, axis=1)
    if np.any(lens <= 1e-12):
        raise DegenerateSegment("coincident consecutive pivots")
    raw = np.cross(seg[:-1], seg[1:])
    norms = np.linalg.norm(raw, axis=1)
    valid = norms >= COLLINEAR_TOL * lens[:-1] * lens[1:]
    normals = np.zeros_like(raw)
    normals[valid] = raw[valid] / norms[valid][:, None]
    if not valid.any():
        normals[:] = _fallback_normal(seg[0])
        return normals
    first = int(np.argmax(valid))
    normals[:first] = normals[first]
    for i in range(first + 1, len(normals)):
        if not valid[i]:
            normals[i] = normals[i - 1]
    return normals


@dataclass(frozen=True)
class BendFrame:
    origin: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray

    @property
    def rotation(self):
        """3x3 matrix whose columns are the frame axes."""
        return np.column_stack([self.x_axis, self.y_axis, self.z_axis])

    def to_local(self, v):
        """Components of a world-frame vector along the frame axes."""
        return self.rotation.T @ np.asarray(v, dtype=float)

    def to_world(self, v):
        return self.rotation @ np.asarray(v, dtype=float)


def build_frame(p_prev, p_cur, n_prev, tol=1e-6):
    """Local bend frame: x along p_prev->p_cur, z the previous bend normal."""
    p_prev = np.asarray(p_prev, dtype=float)
    p_cur = np.asarray(p_cur, dtype=float)
    seg = p_cur - p_prev
    length = norm3(seg)
    if length <= 1e-12:
        raise DegenerateSegment("frame segment has zero length")
    x = seg / length
    z = np.asarray(n_prev, dtype=float)
    if abs(norm3(z) - 1.0) > tol or abs(np.dot(x, z)) > tol:
        raise NonOrthogonalNormal("normal must be unit and orthogonal to the segment")
    # re-orthogonalise so the triad is exact to rounding
    z = unit(z - np.dot(z, x) * x)
    y = cross3(z, x)
    return BendFrame(origin=p_cur.copy(), x_axis=x, y_axis=y, z_axis=z)


def project_onto_plane(v, plane_normal):
    """Orthogonal projection of ``v`` onto the plane with unit normal ``plane_normal``."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(plane_normal, dtype=float)
    return v - np.dot(v, n) * n


def point_polyline_distance(points, polyline):
    """Distance from each point to the nearest segment of ``polyline`` (vectorised)."""
    p = np.asarray(points, dtype=float)[:, None, :]
    a = np.asarray(polyline, dtype=float)[:-1][None, :, :]
    b = np.asarray(polyline, dtype=float)[1:][None, :, :]
    ab = b - a
    ll = np.einsum("ijk,ijk->ij", ab, ab)
    t = np.clip(np.einsum("ijk,ijk->ij", p - a, ab) / np.where(ll > 0, ll, 1.0), 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=2).min(axis=1)
