"""Pure-Python reference versions of the distance kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when
the extension is not built or when ``WIREBEND_PURE_PYTHON=1``.
"""
import math

import numpy as np


def _seg_seg_sq(p0, p1, q0, q1):
    d1x, d1y, d1z = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    d2x, d2y, d2z = q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]
    rx, ry, rz = p0[0] - q0[0], p0[1] - q0[1], p0[2] - q0[2]
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    eps = 1e-18
    if a <= eps and e <= eps:
        return rx * rx + ry * ry + rz * rz
    if a <= eps:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= eps:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > eps * a * e:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    cx = p0[0] + d1x * s - q0[0] - d2x * t
    cy = p0[1] + d1y * s - q0[1] - d2y * t
    cz = p0[2] + d1z * s - q0[2] - d2z * t
    return cx * cx + cy * cy + cz * cz


def segment_distance(p0, p1, q0, q1):
    """Closest distance between segments p0-p1 and q0-q1."""
    return math.sqrt(_seg_seg_sq(p0, p1, q0, q1))


def segments_segments_min(a0, a1, sa, b0, b1, sb, window):
    """Minimum distance over all segment pairs of two sets.

    ``sa``/``sb`` are (N, 2) arclength intervals. Pairs whose intervals come
    within ``window`` of each other are skipped; pass ``window < 0`` to keep
    every pair.
    """
    a0 = np.asarray(a0, dtype=float).tolist()
    a1 = np.asarray(a1, dtype=float).tolist()
    b0 = np.asarray(b0, dtype=float).tolist()
    b1 = np.asarray(b1, dtype=float).tolist()
    sa = np.asarray(sa, dtype=float).tolist()
    sb = np.asarray(sb, dtype=float).tolist()
    best = math.inf
    for i in range(len(a0)):
        for j in range(len(b0)):
            if window >= 0.0:
                gap = max(sb[j][0] - sa[i][1], sa[i][0] - sb[j][1])
                if gap < window:
                    continue
            d = _seg_seg_sq(a0[i], a1[i], b0[j], b1[j])
            if d < best:
                best = d
    return math.sqrt(best) if best < math.inf else math.inf


def _seg_box_sq(p, d, half):
    # breakpoints where a coordinate crosses a slab face
    ts = [0.0, 1.0]
    for k in range(3):
        if d[k] != 0.0:
            for h in (-half[k], half[k]):
                t = (h - p[k]) / d[k]
                if 0.0 < t < 1.0:
                    ts.append(t)
    ts.sort()
    best = math.inf
    for i in range(len(ts) - 1):
        lo, hi = ts[i], ts[i + 1]
        mid = 0.5 * (lo + hi)
        qa = qb = qc = 0.0
        for k in range(3):
            x = p[k] + d[k] * mid
            if x > half[k]:
                off = p[k] - half[k]
            elif x < -half[k]:
                off = p[k] + half[k]
            else:
                continue
            qa += d[k] * d[k]
            qb += 2.0 * d[k] * off
            qc += off * off
        if qa > 0.0:
            t = min(max(-qb / (2.0 * qa), lo), hi)
        else:
            t = lo
        v = (qa * t + qb) * t + qc
        if v < best:
            best = v
    return max(best, 0.0)


def segments_box_min(a0, a1, center, rot, half):
    """Minimum distance from a set of segments to an oriented box.

    ``rot`` columns are the box axes in world coordinates, ``half`` the
    half-extents along them. Returns 0 on intersection.
    """
    rot = np.asarray(rot, dtype=float)
    center = np.asarray(center, dtype=float)
    la0 = ((np.asarray(a0, dtype=float) - center) @ rot).tolist()
    la1 = ((np.asarray(a1, dtype=float) - center) @ rot).tolist()
    half = [float(h) for h in half]
    best = math.inf
    for p, q in zip(la0, la1):
        d = (q[0] - p[0], q[1] - p[1], q[2] - p[2])
        v = _seg_box_sq(p, d, half)
        if v < best:
            best = v
            if best == 0.0:
                break
    return math.sqrt(best)


def segments_halfspace_min(a0, a1, point, normal):
    """Minimum signed height of segment endpoints above a plane."""
    point = np.asarray(point, dtype=float)
    normal = np.asarray(normal, dtype=float)
    h0 = (np.asarray(a0, dtype=float) - point) @ normal
    h1 = (np.asarray(a1, dtype=float) - point) @ normal
    if h0.size == 0:
        return math.inf
    return float(min(h0.min(), h1.min()))


def _max_deviation(pts, first, last):
    ax, ay, az = pts[first]
    bx, by, bz = pts[last]
    dx, dy, dz = bx - ax, by - ay, bz - az
    ll = dx * dx + dy * dy + dz * dz
    best = -1.0
    idx = -1
    for i in range(first + 1, last):
        px, py, pz = pts[i]
        wx, wy, wz = px - ax, py - ay, pz - az
        if ll > 0.0:
            t = (wx * dx + wy * dy + wz * dz) / ll
            t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
            wx -= t * dx
            wy -= t * dy
            wz -= t * dz
        dist = wx * wx + wy * wy + wz * wz
        if dist > best:
            best = dist
            idx = i
    return idx, best


def rdp_keep(points, epsilon):
    """Ramer-Douglas-Peucker keep-mask, iterative with an explicit stack."""
    pts = np.asarray(points, dtype=float).tolist()
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[n - 1] = True
    eps2 = epsilon * epsilon
    stack = [(0, n - 1)]
    while stack:
        first, last = stack.pop()
        if last - first < 2:
            continue
        idx, d2 = _max_deviation(pts, first, last)
        if d2 > eps2:
            keep[idx] = True
            # right half pushed first so the left half is processed first
            stack.append((idx, last))
            stack.append((first, idx))
    return keep


def _capsule_body_sq_or_h(a, b, kind, prm):
    """Squared distance to a capsule axis / box, or signed height for a half-space."""
    if kind == 0:
        p, n = prm[0:3], prm[3:6]
        h0 = (a[0] - p[0]) * n[0] + (a[1] - p[1]) * n[1] + (a[2] - p[2]) * n[2]
        h1 = (b[0] - p[0]) * n[0] + (b[1] - p[1]) * n[1] + (b[2] - p[2]) * n[2]
        return min(h0, h1)
    if kind == 1:
        return math.sqrt(_seg_seg_sq(a, b, prm[0:3], prm[3:6])) - prm[6]
    c, R, half = prm[0:3], prm[3:12], prm[12:15]
    la = [sum((a[j] - c[j]) * R[3 * j + k] for j in range(3)) for k in range(3)]
    lb = [sum((b[j] - c[j]) * R[3 * j + k] for j in range(3)) for k in range(3)]
    d = (lb[0] - la[0], lb[1] - la[1], lb[2] - la[2])
    return math.sqrt(_seg_box_sq(la, d, half))


def capsules_clear(a, b, radii, mask, kinds, params, clearance):
    """True if every capsule clears every unmasked packed body by more than ``clearance``.

    ``kinds``: 0 half-space (point, normal), 1 capsule (a, b, radius),
    2 box (center, row-major axes matrix, half extents).
    """
    a = np.asarray(a, dtype=float).tolist()
    b = np.asarray(b, dtype=float).tolist()
    radii = np.asarray(radii, dtype=float).tolist()
    mask = np.asarray(mask).tolist()
    kinds = np.asarray(kinds).tolist()
    params = np.asarray(params, dtype=float).tolist()
    for i in range(len(a)):
        for j in range(len(kinds)):
            if not mask[i][j]:
                continue
            if _capsule_body_sq_or_h(a[i], b[i], kinds[j], params[j]) - radii[i] <= clearance:
                return False
    return True


def capsules_segments_clear(a, b, radii, w0, w1, w_radius, clearance):
    """True if every capsule clears the swept-sphere segments by more than ``clearance``."""
    a = np.asarray(a, dtype=float).tolist()
    b = np.asarray(b, dtype=float).tolist()
    radii = np.asarray(radii, dtype=float).tolist()
    w0 = np.asarray(w0, dtype=float).reshape(-1, 3).tolist()
    w1 = np.asarray(w1, dtype=float).reshape(-1, 3).tolist()
    for i in range(len(a)):
        lim = radii[i] + w_radius + clearance
        for j in range(len(w0)):
            if _seg_seg_sq(a[i], b[i], w0[j], w1[j]) <= lim * lim:
                return False
    return True


def rotation_log(R):
    """Rotation vector of a 3x3 rotation matrix, stable near zero and pi."""
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = math.sqrt(float(v @ v))
    c = max(-1.0, min(1.0, (R[0, 0] + R[1, 1] + R[2, 2] - 1.0) / 2.0))
    th = math.atan2(s / 2.0, c)
    if s > 1e-6:
        return v * (th / s)
    if c > 0.0:
        return 0.5 * v
    k = int(np.argmax(np.diag(R)))
    axis = (R[:, k] + np.eye(3)[:, k]) / 2.0
    axis = axis / math.sqrt(max(axis[k], 1e-300))
    axis /= np.linalg.norm(axis)
    if axis @ v < 0.0:
        axis = -axis
    return th * axis


def _chain(off, ax, base, tool, q):
    n = len(q)
    p = np.empty((n, 3))
    z = np.empty((n, 3))
    T = base.copy()
    for i in range(n):
        x, y, w = ax[i]
        K = np.array([[0.0, -w, y], [w, 0.0, -x], [-y, x, 0.0]])
        G = np.eye(4)
        G[:3, :3] += math.sin(q[i]) * K + (1.0 - math.cos(q[i])) * (K @ K)
        T = T @ off[i] @ G
        p[i] = T[:3, 3]
        z[i] = T[:3, :3] @ ax[i]
    return p, z, T @ tool


def dls_solve(off, ax, base, tool, lo, hi, target, q0, iters, damping, pos_tol, rot_tol, patience):
    """Damped least-squares IK from ``q0``.

    Returns ``(q, converged)``; convergence means both errors fell below a
    tenth of their tolerances. Steps are clipped to 0.5 rad per joint and
    wrapped into the limits.
    """
    q = np.array(q0, dtype=float)
    lam2 = damping * damping
    best, since = math.inf, 0
    for _ in range(iters):
        p, z, T = _chain(off, ax, base, tool, q)
        dp = target[:3, 3] - T[:3, 3]
        w = rotation_log(target[:3, :3] @ T[:3, :3].T)
        ep, er = math.sqrt(float(dp @ dp)), math.sqrt(float(w @ w))
        if ep <= pos_tol * 0.1 and er <= rot_tol * 0.1:
            return q, True
        err = ep + 0.1 * er
        if err < 0.95 * best:
            best, since = err, 0
        else:
            since += 1
            if since > patience:  # stuck in a local minimum or at a limit
                break
        J = np.vstack([np.cross(z, T[:3, 3] - p).T, z.T])
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), np.concatenate([dp, w]))
        m = np.abs(dq).max()
        if m > 0.5:
            dq *= 0.5 / m
        q = q + dq
        for _ in range(2):
            q = np.where(q > hi, q - 2 * math.pi, q)
            q = np.where(q < lo, q + 2 * math.pi, q)
        q = np.clip(q, lo, hi)
    return q, False
