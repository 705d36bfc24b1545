# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels; mirrors ``_kernels_py`` one-to-one."""
from libc.math cimport sqrt, sin, cos, atan2, fabs, INFINITY, M_PI

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _clamp01(double x) nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


cdef double _seg_seg_sq(const double[:] p0, const double[:] p1,
                        const double[:] q0, const double[:] q1) nogil:
    cdef double d1x = p1[0] - p0[0], d1y = p1[1] - p0[1], d1z = p1[2] - p0[2]
    cdef double d2x = q1[0] - q0[0], d2y = q1[1] - q0[1], d2z = q1[2] - q0[2]
    cdef double rx = p0[0] - q0[0], ry = p0[1] - q0[1], rz = p0[2] - q0[2]
    cdef double a = d1x * d1x + d1y * d1y + d1z * d1z
    cdef double e = d2x * d2x + d2y * d2y + d2z * d2z
    cdef double f = d2x * rx + d2y * ry + d2z * rz
    cdef double eps = 1e-18
    cdef double s, t, b, c, denom, cx, cy, cz
    if a <= eps and e <= eps:
        return rx * rx + ry * ry + rz * rz
    if a <= eps:
        s = 0.0
        t = _clamp01(f / e)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= eps:
            t = 0.0
            s = _clamp01(-c / a)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > eps * a * e:
                s = _clamp01((b * f - c * e) / denom)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = _clamp01(-c / a)
            elif t > 1.0:
                t = 1.0
                s = _clamp01((b - c) / a)
    cx = p0[0] + d1x * s - q0[0] - d2x * t
    cy = p0[1] + d1y * s - q0[1] - d2y * t
    cz = p0[2] + d1z * s - q0[2] - d2z * t
    return cx * cx + cy * cy + cz * cz


def segment_distance(p0, p1, q0, q1):
    cdef double[:] a = np.ascontiguousarray(p0, dtype=np.float64)
    cdef double[:] b = np.ascontiguousarray(p1, dtype=np.float64)
    cdef double[:] c = np.ascontiguousarray(q0, dtype=np.float64)
    cdef double[:] d = np.ascontiguousarray(q1, dtype=np.float64)
    return sqrt(_seg_seg_sq(a, b, c, d))


def segments_segments_min(a0, a1, sa, b0, b1, sb, double window):
    cdef const double[:, :] A0 = np.ascontiguousarray(a0, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] A1 = np.ascontiguousarray(a1, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] B0 = np.ascontiguousarray(b0, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] B1 = np.ascontiguousarray(b1, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] SA = np.ascontiguousarray(sa, dtype=np.float64).reshape(-1, 2)
    cdef const double[:, :] SB = np.ascontiguousarray(sb, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t i, j, n = A0.shape[0], m = B0.shape[0]
    cdef double best = INFINITY, d, gap
    with nogil:
        for i in range(n):
            for j in range(m):
                if window >= 0.0:
                    gap = SB[j, 0] - SA[i, 1]
                    if SA[i, 0] - SB[j, 1] > gap:
                        gap = SA[i, 0] - SB[j, 1]
                    if gap < window:
                        continue
                d = _seg_seg_sq(A0[i], A1[i], B0[j], B1[j])
                if d < best:
                    best = d
    if best == INFINITY:
        return INFINITY
    return sqrt(best)


cdef double _seg_box_sq(double* p, double* d, double* half) nogil:
    cdef double ts[8]
    cdef int nt = 2, k, i, j
    cdef double t, h, tmp, lo, hi, mid, qa, qb, qc, x, off, v
    cdef double best = INFINITY
    ts[0] = 0.0
    ts[1] = 1.0
    for k in range(3):
        if d[k] != 0.0:
            for j in range(2):
                h = half[k] if j == 1 else -half[k]
                t = (h - p[k]) / d[k]
                if 0.0 < t < 1.0:
                    ts[nt] = t
                    nt += 1
    # insertion sort, at most 8 entries
    for i in range(1, nt):
        tmp = ts[i]
        j = i - 1
        while j >= 0 and ts[j] > tmp:
            ts[j + 1] = ts[j]
            j -= 1
        ts[j + 1] = tmp
    for i in range(nt - 1):
        lo = ts[i]
        hi = ts[i + 1]
        mid = 0.5 * (lo + hi)
        qa = 0.0
        qb = 0.0
        qc = 0.0
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
            t = -qb / (2.0 * qa)
            if t < lo:
                t = lo
            elif t > hi:
                t = hi
        else:
            t = lo
        v = (qa * t + qb) * t + qc
        if v < best:
            best = v
    if best < 0.0:
        return 0.0
    return best


def segments_box_min(a0, a1, center, rot, half):
    R = np.asarray(rot, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    cdef const double[:, :] L0 = np.ascontiguousarray((np.asarray(a0, dtype=np.float64).reshape(-1, 3) - c) @ R)
    cdef const double[:, :] L1 = np.ascontiguousarray((np.asarray(a1, dtype=np.float64).reshape(-1, 3) - c) @ R)
    cdef double hh[3]
    cdef double p[3]
    cdef double d[3]
    hh[0] = half[0]
    hh[1] = half[1]
    hh[2] = half[2]
    cdef Py_ssize_t i, k, n = L0.shape[0]
    cdef double best = INFINITY, v
    with nogil:
        for i in range(n):
            for k in range(3):
                p[k] = L0[i, k]
                d[k] = L1[i, k] - L0[i, k]
            v = _seg_box_sq(p, d, hh)
            if v < best:
                best = v
                if best == 0.0:
                    break
    return sqrt(best)


def segments_halfspace_min(a0, a1, point, normal):
    cdef const double[:, :] A0 = np.ascontiguousarray(a0, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] A1 = np.ascontiguousarray(a1, dtype=np.float64).reshape(-1, 3)
    cdef double px = point[0], py = point[1], pz = point[2]
    cdef double nx = normal[0], ny = normal[1], nz = normal[2]
    cdef Py_ssize_t i, n = A0.shape[0]
    cdef double best = INFINITY, h
    with nogil:
        for i in range(n):
            h = (A0[i, 0] - px) * nx + (A0[i, 1] - py) * ny + (A0[i, 2] - pz) * nz
            if h < best:
                best = h
            h = (A1[i, 0] - px) * nx + (A1[i, 1] - py) * ny + (A1[i, 2] - pz) * nz
            if h < best:
                best = h
    return best


cdef double _body_gap(const double[:] a, const double[:] b, int kind, const double[:] prm) nogil:
    cdef double h0, h1
    cdef double la[3]
    cdef double lb[3]
    cdef double d[3]
    cdef double hh[3]
    cdef int j, k
    if kind == 0:
        h0 = (a[0] - prm[0]) * prm[3] + (a[1] - prm[1]) * prm[4] + (a[2] - prm[2]) * prm[5]
        h1 = (b[0] - prm[0]) * prm[3] + (b[1] - prm[1]) * prm[4] + (b[2] - prm[2]) * prm[5]
        return h0 if h0 < h1 else h1
    if kind == 1:
        return sqrt(_seg_seg_sq(a, b, prm[0:3], prm[3:6])) - prm[6]
    for k in range(3):
        la[k] = 0.0
        lb[k] = 0.0
        for j in range(3):
            la[k] += (a[j] - prm[j]) * prm[3 + 3 * j + k]
            lb[k] += (b[j] - prm[j]) * prm[3 + 3 * j + k]
        d[k] = lb[k] - la[k]
        hh[k] = prm[12 + k]
    return sqrt(_seg_box_sq(la, d, hh))


def capsules_clear(a, b, radii, mask, kinds, params, double clearance):
    cdef const double[:, :] A = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 3)
    cdef const double[:] Rr = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const unsigned char[:, :] M = np.ascontiguousarray(mask, dtype=np.uint8).reshape(A.shape[0], -1)
    cdef const long[:] K = np.ascontiguousarray(kinds, dtype=np.int64)
    cdef const double[:, :] P = np.ascontiguousarray(params, dtype=np.float64).reshape(K.shape[0], -1)
    cdef Py_ssize_t i, j
    cdef bint ok = True
    with nogil:
        for i in range(A.shape[0]):
            for j in range(K.shape[0]):
                if M[i, j] and _body_gap(A[i], B[i], <int>K[j], P[j]) - Rr[i] <= clearance:
                    ok = False
                    break
            if not ok:
                break
    return ok


def capsules_segments_clear(a, b, radii, w0, w1, double w_radius, double clearance):
    cdef const double[:, :] A = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 3)
    cdef const double[:] Rr = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const double[:, :] W0 = np.ascontiguousarray(w0, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :] W1 = np.ascontiguousarray(w1, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t i, j
    cdef double lim
    cdef bint ok = True
    with nogil:
        for i in range(A.shape[0]):
            lim = Rr[i] + w_radius + clearance
            for j in range(W0.shape[0]):
                if _seg_seg_sq(A[i], B[i], W0[j], W1[j]) <= lim * lim:
                    ok = False
                    break
            if not ok:
                break
    return ok


def rdp_keep(points, double epsilon):
    cdef const double[:, :] P = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n = P.shape[0]
    keep_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[:] keep = keep_arr
    cdef cnp.intp_t[:] stack = np.empty(2 * n + 4, dtype=np.intp)
    cdef Py_ssize_t top = 0, first, last, i, idx
    cdef double eps2 = epsilon * epsilon
    cdef double ax, ay, az, dx, dy, dz, ll, wx, wy, wz, t, dist, best
    keep[0] = 1
    keep[n - 1] = 1
    stack[0] = 0
    stack[1] = n - 1
    top = 2
    with nogil:
        while top > 0:
            last = stack[top - 1]
            first = stack[top - 2]
            top -= 2
            if last - first < 2:
                continue
            ax = P[first, 0]
            ay = P[first, 1]
            az = P[first, 2]
            dx = P[last, 0] - ax
            dy = P[last, 1] - ay
            dz = P[last, 2] - az
            ll = dx * dx + dy * dy + dz * dz
            best = -1.0
            idx = -1
            for i in range(first + 1, last):
                wx = P[i, 0] - ax
                wy = P[i, 1] - ay
                wz = P[i, 2] - az
                if ll > 0.0:
                    t = _clamp01((wx * dx + wy * dy + wz * dz) / ll)
                    wx = wx - t * dx
                    wy = wy - t * dy
                    wz = wz - t * dz
                dist = wx * wx + wy * wy + wz * wz
                if dist > best:
                    best = dist
                    idx = i
            if best > eps2:
                keep[idx] = 1
                stack[top] = idx
                stack[top + 1] = last
                stack[top + 2] = first
                stack[top + 3] = idx
                top += 4
    return keep_arr.astype(bool)


DEF MAXJ = 16


cdef void _matmul4(const double* A, const double* B, double* C) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc = acc + A[4 * i + k] * B[4 * k + j]
            C[4 * i + j] = acc


cdef void _rotation_log(const double* R, double* w) noexcept nogil:
    cdef double v0 = R[7] - R[5]
    cdef double v1 = R[2] - R[6]
    cdef double v2 = R[3] - R[1]
    cdef double s = sqrt(v0 * v0 + v1 * v1 + v2 * v2)
    cdef double c = (R[0] + R[4] + R[8] - 1.0) / 2.0
    cdef double th, n
    cdef double a[3]
    cdef int k, i
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    th = atan2(s / 2.0, c)
    if s > 1e-6:
        w[0] = v0 * th / s
        w[1] = v1 * th / s
        w[2] = v2 * th / s
        return
    if c > 0.0:
        w[0] = 0.5 * v0
        w[1] = 0.5 * v1
        w[2] = 0.5 * v2
        return
    k = 0
    if R[4] > R[0]:
        k = 1
    if R[8] > R[4 * k]:
        k = 2
    for i in range(3):
        a[i] = R[3 * i + k] / 2.0
    a[k] = a[k] + 0.5
    n = sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    if n < 1e-300:
        n = 1e-300
    if a[0] * v0 + a[1] * v1 + a[2] * v2 < 0.0:
        n = -n
    for i in range(3):
        w[i] = th * a[i] / n


cdef void _chain(int nj, const double* off, const double* ax, const double* base, const double* tool,
                 const double* q, double* p, double* z, double* tcp) noexcept nogil:
    cdef double T[16]
    cdef double U[16]
    cdef double G[16]
    cdef int i, j
    cdef double x, y, u, sn, cs, vc
    for j in range(16):
        T[j] = base[j]
    for i in range(nj):
        x = ax[3 * i]
        y = ax[3 * i + 1]
        u = ax[3 * i + 2]
        sn = sin(q[i])
        cs = cos(q[i])
        vc = 1.0 - cs
        G[0] = cs + x * x * vc
        G[1] = x * y * vc - u * sn
        G[2] = x * u * vc + y * sn
        G[3] = 0.0
        G[4] = y * x * vc + u * sn
        G[5] = cs + y * y * vc
        G[6] = y * u * vc - x * sn
        G[7] = 0.0
        G[8] = u * x * vc - y * sn
        G[9] = u * y * vc + x * sn
        G[10] = cs + u * u * vc
        G[11] = 0.0
        G[12] = 0.0
        G[13] = 0.0
        G[14] = 0.0
        G[15] = 1.0
        _matmul4(T, &off[16 * i], U)
        _matmul4(U, G, T)
        for j in range(3):
            p[3 * i + j] = T[4 * j + 3]
            z[3 * i + j] = T[4 * j] * x + T[4 * j + 1] * y + T[4 * j + 2] * u
    _matmul4(T, tool, tcp)


cdef bint _solve6(double* A, double* b) nogil:
    """Gaussian elimination with partial pivoting, in place; result in b."""
    cdef int i, j, k, piv
    cdef double m, t
    for k in range(6):
        piv = k
        for i in range(k + 1, 6):
            if fabs(A[6 * i + k]) > fabs(A[6 * piv + k]):
                piv = i
        if fabs(A[6 * piv + k]) < 1e-300:
            return False
        if piv != k:
            for j in range(6):
                t = A[6 * k + j]
                A[6 * k + j] = A[6 * piv + j]
                A[6 * piv + j] = t
            t = b[k]
            b[k] = b[piv]
            b[piv] = t
        for i in range(k + 1, 6):
            m = A[6 * i + k] / A[6 * k + k]
            for j in range(k, 6):
                A[6 * i + j] = A[6 * i + j] - m * A[6 * k + j]
            b[i] = b[i] - m * b[k]
    for i in range(5, -1, -1):
        t = b[i]
        for j in range(i + 1, 6):
            t = t - A[6 * i + j] * b[j]
        b[i] = t / A[6 * i + i]
    return True


def rotation_log(R):
    cdef double[:, ::1] Rm = np.ascontiguousarray(R, dtype=np.float64)
    out = np.empty(3)
    cdef double[::1] w = out
    _rotation_log(&Rm[0, 0], &w[0])
    return out


def dls_solve(off, ax, base, tool, lo, hi, target, q0, int iters, double damping, double pos_tol,
              double rot_tol, int patience):
    cdef double[:, :, ::1] O = np.ascontiguousarray(off, dtype=np.float64)
    cdef double[:, ::1] A = np.ascontiguousarray(ax, dtype=np.float64)
    cdef double[:, ::1] B = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[:, ::1] Tl = np.ascontiguousarray(tool, dtype=np.float64)
    cdef double[:, ::1] Tg = np.ascontiguousarray(target, dtype=np.float64)
    cdef double[::1] L = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] H = np.ascontiguousarray(hi, dtype=np.float64)
    out = np.array(q0, dtype=np.float64)
    cdef double[::1] q = out
    cdef int nj = q.shape[0]
    if nj > MAXJ or O.shape[0] != nj or A.shape[0] != nj:
        raise ValueError("joint tables do not match the configuration length")
    cdef double p[3 * MAXJ]
    cdef double z[3 * MAXJ]
    cdef double J[6 * MAXJ]
    cdef double tcp[16]
    cdef double Re[9]
    cdef double M[36]
    cdef double e[6]
    cdef double dq[MAXJ]
    cdef double lam2 = damping * damping
    cdef double best = INFINITY
    cdef int since = 0
    cdef int it, i, j, k, r
    cdef double ep, er, err, m, rx, ry, rz, acc
    cdef bint done = False
    with nogil:
        for it in range(iters):
            _chain(nj, &O[0, 0, 0], &A[0, 0], &B[0, 0], &Tl[0, 0], &q[0], p, z, tcp)
            for i in range(3):
                e[i] = Tg[i, 3] - tcp[4 * i + 3]
                for j in range(3):
                    acc = 0.0
                    for k in range(3):
                        acc = acc + Tg[i, k] * tcp[4 * j + k]
                    Re[3 * i + j] = acc
            _rotation_log(Re, &e[3])
            ep = sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
            er = sqrt(e[3] * e[3] + e[4] * e[4] + e[5] * e[5])
            if ep <= pos_tol * 0.1 and er <= rot_tol * 0.1:
                done = True
                break
            err = ep + 0.1 * er
            if err < 0.95 * best:
                best = err
                since = 0
            else:
                since = since + 1
                if since > patience:
                    break
            for i in range(nj):
                rx = tcp[3] - p[3 * i]
                ry = tcp[7] - p[3 * i + 1]
                rz = tcp[11] - p[3 * i + 2]
                J[i] = z[3 * i + 1] * rz - z[3 * i + 2] * ry
                J[nj + i] = z[3 * i + 2] * rx - z[3 * i] * rz
                J[2 * nj + i] = z[3 * i] * ry - z[3 * i + 1] * rx
                J[3 * nj + i] = z[3 * i]
                J[4 * nj + i] = z[3 * i + 1]
                J[5 * nj + i] = z[3 * i + 2]
            for r in range(6):
                for k in range(6):
                    acc = 0.0
                    for i in range(nj):
                        acc = acc + J[r * nj + i] * J[k * nj + i]
                    M[6 * r + k] = acc
                M[6 * r + r] = M[6 * r + r] + lam2
            if not _solve6(M, e):
                break
            m = 0.0
            for i in range(nj):
                acc = 0.0
                for r in range(6):
                    acc = acc + J[r * nj + i] * e[r]
                dq[i] = acc
                if fabs(acc) > m:
                    m = fabs(acc)
            if m > 0.5:
                m = 0.5 / m
            else:
                m = 1.0
            for i in range(nj):
                q[i] = q[i] + dq[i] * m
                for k in range(2):
                    if q[i] > H[i]:
                        q[i] = q[i] - 2.0 * M_PI
                    if q[i] < L[i]:
                        q[i] = q[i] + 2.0 * M_PI
                if q[i] > H[i]:
                    q[i] = H[i]
                if q[i] < L[i]:
                    q[i] = L[i]
    return out, bool(done)
