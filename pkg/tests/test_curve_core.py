import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wirebend.errors import DegenerateSegment, EmptyCurve, NonFinite, NonOrthogonalNormal, TooFewPoints
from wirebend.geometry import build_frame, compute_bend_normals, point_polyline_distance, project_onto_plane, \
    rdp_simplify

from oracles import max_deviation, rdp_recursive

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)


def smooth_curve(rng, n):
    t = np.linspace(0, 1, n)
    coef = rng.normal(scale=0.05, size=(3, 4))
    return np.stack([sum(c[k] * np.sin((k + 1) * math.pi * t + c[3]) for k in range(3)) for c in coef], axis=1) \
        + np.outer(t, rng.normal(size=3) * 0.1)


# ---- rdp_simplify


def test_rdp_two_points_unchanged():
    pts = np.array([[0, 0, 0], [1, 2, 3.0]])
    assert np.array_equal(rdp_simplify(pts, 0.001), pts)


def test_rdp_collinear_keeps_endpoints():
    pts = np.column_stack([np.linspace(0, 1, 100), np.zeros(100), np.zeros(100)])
    out = rdp_simplify(pts, 0.001)
    assert np.array_equal(out, pts[[0, -1]])


def test_rdp_errors():
    with pytest.raises(EmptyCurve):
        rdp_simplify(np.zeros((1, 3)), 0.1)
    with pytest.raises(NonFinite):
        rdp_simplify(np.array([[0, 0, 0], [np.nan, 0, 0]]), 0.1)
    with pytest.raises(ValueError):
        rdp_simplify(np.array([[0, 0, 0], [1, 0, 0.0]]), 0.0)


def test_rdp_smooth_curve_matches_recursive_reference(rng):
    pts = smooth_curve(rng, 200)
    out = rdp_simplify(pts, 0.005)
    assert max_deviation(pts, out) <= 0.005
    ref = rdp_recursive(pts, 0.005)
    assert np.array_equal(out, pts[ref])


def test_rdp_large_curve_has_no_recursion_limit():
    t = np.linspace(0, 400 * math.pi, 200_000)
    pts = np.column_stack([np.cos(t), np.sin(t), t * 1e-3])
    out = rdp_simplify(pts, 1e-4)
    assert len(out) > 1000
    assert np.array_equal(out[0], pts[0]) and np.array_equal(out[-1], pts[-1])


@given(st.integers(0, 2**32 - 1), st.integers(2, 120), st.floats(1e-4, 0.05))
def test_rdp_deviation_bound_and_subsequence(seed, n, eps):
    rng = np.random.default_rng(seed)
    pts = np.cumsum(rng.normal(scale=0.01, size=(n, 3)), axis=0)
    out = rdp_simplify(pts, eps)
    assert np.array_equal(out[0], pts[0]) and np.array_equal(out[-1], pts[-1])
    idx = [int(np.flatnonzero((pts == p).all(axis=1))[0]) for p in out]
    assert idx == sorted(idx)
    assert point_polyline_distance(pts, out).max() <= eps + 1e-15


@given(st.integers(0, 2**32 - 1), st.integers(2, 80), st.floats(1e-4, 0.05))
def test_rdp_idempotent(seed, n, eps):
    rng = np.random.default_rng(seed)
    pts = np.cumsum(rng.normal(scale=0.01, size=(n, 3)), axis=0)
    once = rdp_simplify(pts, eps)
    assert np.array_equal(rdp_simplify(once, eps), once)


# ---- compute_bend_normals


def test_normals_planar_right_angle():
    n = compute_bend_normals([[0, 0, 0], [1, 0, 0], [1, 1, 0]])
    assert np.allclose(n, [[0, 0, 1]])


def test_normals_leading_collinear_pivot_takes_next_normal():
    n = compute_bend_normals([[0, 0, 0], [1, 0, 0], [2, 0, 0], [2, 0, 1]])
    assert np.allclose(n, [[0, -1, 0], [0, -1, 0]])


def test_normals_carry_forward():
    n = compute_bend_normals([[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 2, 0]])
    assert np.allclose(n, [[0, 0, 1], [0, 0, 1]])


def test_normals_fully_straight_uses_first_independent_axis():
    n = compute_bend_normals([[0, 0, 0], [1, 0, 0], [2, 0, 0]])
    assert np.allclose(n, [[0, 1, 0]])
    n = compute_bend_normals([[0, 0, 0], [0, 1, 1], [0, 2, 2]])
    assert np.allclose(n, [[1, 0, 0]])


def test_normals_errors():
    with pytest.raises(TooFewPoints):
        compute_bend_normals([[0, 0, 0], [1, 0, 0]])
    with pytest.raises(DegenerateSegment):
        compute_bend_normals([[0, 0, 0], [0, 0, 0], [1, 0, 0]])


@given(st.integers(0, 2**32 - 1), st.integers(3, 12))
def test_normals_orthogonal_to_adjacent_segments(seed, n):
    rng = np.random.default_rng(seed)
    pts = np.cumsum(rng.normal(size=(n, 3)), axis=0)
    normals = compute_bend_normals(pts)
    assert len(normals) == n - 2
    seg = np.diff(pts, axis=0)
    seg /= np.linalg.norm(seg, axis=1)[:, None]
    assert np.allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-9)
    assert np.abs(np.einsum("ij,ij->i", normals, seg[:-1])).max() < 1e-6
    assert np.abs(np.einsum("ij,ij->i", normals, seg[1:])).max() < 1e-6


# ---- build_frame


def test_frame_canonical():
    f = build_frame([0, 0, 0], [1, 0, 0], [0, 0, 1])
    assert np.allclose(f.origin, [1, 0, 0])
    assert np.allclose([f.x_axis, f.y_axis, f.z_axis], np.eye(3))


def test_frame_flipped_normal_flips_y():
    f = build_frame([0, 0, 0], [1, 0, 0], [0, 0, -1])
    assert np.allclose(f.y_axis, [0, -1, 0])


def test_frame_errors():
    with pytest.raises(DegenerateSegment):
        build_frame([1, 1, 1], [1, 1, 1], [0, 0, 1])
    with pytest.raises(NonOrthogonalNormal):
        build_frame([0, 0, 0], [1, 0, 0], [1, 0, 0])
    with pytest.raises(NonOrthogonalNormal):
        build_frame([0, 0, 0], [1, 0, 0], [0, 0, 2])


def test_frame_random_orthonormal_right_handed(rng):
    for _ in range(10_000):
        p0, p1 = rng.normal(size=3), rng.normal(size=3)
        x = (p1 - p0) / np.linalg.norm(p1 - p0)
        n = np.cross(x, rng.normal(size=3))
        n /= np.linalg.norm(n)
        f = build_frame(p0, p1, n)
        R = f.rotation
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-9
        assert np.cross(f.x_axis, f.y_axis) @ f.z_axis > 0
        assert np.allclose(f.x_axis, x, atol=1e-12) and np.allclose(f.z_axis, n, atol=1e-9)


# ---- project_onto_plane


def test_projection_examples():
    assert np.allclose(project_onto_plane([1, 2, 3], [0, 0, 1]), [1, 2, 0])
    assert np.allclose(project_onto_plane([0, 0, 5], [0, 0, 1]), 0)
    assert np.allclose(project_onto_plane([0, 0, 0], [0, 1, 0]), 0)


@given(vec3, vec3)
def test_projection_properties(v, n):
    if np.linalg.norm(n) < 1e-3:
        n = np.array([0.0, 0.0, 1.0])
    n = n / np.linalg.norm(n)
    p = project_onto_plane(v, n)
    assert abs(p @ n) <= 1e-9 * max(1.0, np.linalg.norm(v))
    assert np.linalg.norm(p) <= np.linalg.norm(v) + 1e-12
    assert np.allclose(project_onto_plane(p, n), p, atol=1e-12)
    assert np.linalg.norm(np.cross(v - p, n)) <= 1e-9 * max(1.0, np.linalg.norm(v))
