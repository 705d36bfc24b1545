import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wirebend import motion, sim
from wirebend.errors import CollidingEndpoint, NoSolution
from wirebend.motion import GraspPose, GraspVerdict

from oracles import dh_forward, point_body_distance, sampled_clearance
from scenes import project_scene

UR3E_D = (0.15185, 0.0, 0.0, 0.13105, 0.08535, 0.0921)
UR3E_A = (0.0, -0.24355, -0.2132, 0.0, 0.0, 0.0)
UR3E_ALPHA = (math.pi / 2, 0.0, 0.0, math.pi / 2, -math.pi / 2, 0.0)


@pytest.fixture(scope="module")
def scene():
    return project_scene()


def robot_clearance(sc, robot, q, held=None):
    """Sampled gap between the robot (plus held wire) and the scene; independent of the kernels."""
    frames, tcp = robot.frames(q)
    caps = robot.link_capsules(q, frames)
    caps += [(a, b, r, ()) for a, b, r in robot.gripper_capsules(tcp)]
    gap = sampled_clearance(caps, sc.robot_env.bodies)
    if held is not None:
        a0, a1 = held.world(tcp)
        gap = min(gap, sampled_clearance([(a, b, held.radius, ()) for a, b in zip(a0, a1)], sc.env.bodies, 8))
    return gap


# ---- kinematics


def test_fk_matches_dh_table(rng):
    robot = motion.ur3e()
    for _ in range(200):
        q = robot.random_config(rng)
        ref = dh_forward(q, UR3E_D, UR3E_A, UR3E_ALPHA, np.eye(4), motion.GRIPPER_LENGTH)
        assert np.allclose(robot.fk(q), ref, atol=1e-12)


def test_jacobian_matches_finite_differences(rng):
    robot = motion.ur3e()
    h = 1e-6
    for _ in range(20):
        q = robot.random_config(rng)
        J, T = robot.jacobian(q)
        for i in range(6):
            dq = np.zeros(6)
            dq[i] = h
            Tp, Tm = robot.fk(q + dq), robot.fk(q - dq)
            dp = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
            dR = (Tp[:3, :3] - Tm[:3, :3]) / (2 * h) @ T[:3, :3].T
            w = np.array([dR[2, 1], dR[0, 2], dR[1, 0]])
            assert np.allclose(J[:3, i], dp, atol=1e-6) and np.allclose(J[3:, i], w, atol=1e-6)


def test_ik_recovers_sampled_poses(rng):
    robot = motion.ur3e()
    solved = 0
    for _ in range(100):
        T = robot.fk(robot.random_config(rng))
        try:
            q = motion.solve_ik(robot, T, rng=rng)
        except NoSolution:
            continue
        solved += 1
        assert motion.within_tolerance(robot, q, T) and robot.within_limits(q)
    assert solved >= 99


def test_ik_home_pose_from_home_seed():
    robot = motion.ur3e()
    T = robot.fk(robot.home)
    q = motion.solve_ik(robot, T, seed=robot.home, restarts=0)
    assert np.allclose(q, robot.home, atol=1e-9)


def test_ik_out_of_reach_and_bad_input():
    robot = motion.ur3e()
    T = np.eye(4)
    T[:3, 3] = (2.0, 0.0, 0.2)
    with pytest.raises(NoSolution):
        motion.solve_ik(robot, T)
    with pytest.raises(ValueError):
        motion.solve_ik(robot, np.eye(3))
    with pytest.raises(ValueError):
        motion.solve_ik(robot, robot.fk(robot.home), seed=np.full(6, 10.0))


def test_ik_accept_filter_can_reject_everything():
    robot = motion.ur3e()
    with pytest.raises(NoSolution):
        motion.solve_ik(robot, robot.fk(robot.home), restarts=3, accept=lambda q: False)


# ---- collision scene


def test_config_clear_agrees_with_sampling_oracle(scene, rng):
    sc = motion.scene_for(scene.robot, scene.env, scene.machine)
    seen = {True: 0, False: 0}
    for _ in range(150):
        q = scene.robot.random_config(rng)
        ok = sc.config_clear(q)
        gap = robot_clearance(sc, scene.robot, q)
        seen[ok] += 1
        if ok:
            assert gap >= -1e-9
        elif gap > 1e-3:
            pytest.fail(f"kernel reports a collision the sampled check puts {gap} m away")
    assert seen[True] > 20 and seen[False] > 20


def test_point_body_distance_oracle_sanity():
    box = sim.Box("b", (0, 0, 0), (1, 1, 1))
    assert point_body_distance((2, 0, 0), box) == pytest.approx(1.0)
    assert point_body_distance((0, 0, 0.5), box) == pytest.approx(-0.5)
    assert point_body_distance((2, 2, 0), box) == pytest.approx(math.sqrt(2))


# ---- grasp classification


def _upward_grasp(wire, s):
    """Roll whose approach direction points most upward: the gripper sits under the wire."""
    rolls = np.linspace(0, 2 * math.pi, 73)[:-1]
    up = [motion.grasp_transform(wire, GraspPose(0, s, r))[2, 2] for r in rolls]
    return GraspPose(999, s, float(rolls[int(np.argmax(up))]))


def test_grasp_from_below_collides_with_machine(scene):
    st0 = scene.steps[0]
    g = _upward_grasp(st0.posed, 0.04)
    lo, hi = motion.fixed_range(st0.posed)
    assert lo <= g.s - g.footprint and g.s + g.footprint <= hi
    v, q = motion.classify_grasp(g, st0.posed, scene.robot, scene.env)
    assert v == GraspVerdict.COLLIDED and q is None
    tcp = motion.grasp_transform(st0.posed, g)
    caps = [(a, b, r, ()) for a, b, r in scene.robot.gripper_capsules(tcp)]
    assert sampled_clearance(caps, scene.env.bodies) < 0


def test_grasp_on_moving_part_collides(scene):
    st0 = scene.steps[0]
    lo, hi = motion.fixed_range(st0.posed)
    v, _ = motion.classify_grasp(GraspPose(0, hi + 0.01, 0.0), st0.posed, scene.robot, scene.env)
    assert v == GraspVerdict.COLLIDED


def test_far_away_wire_is_ik_infeasible(scene):
    w = scene.steps[0].posed
    T = np.eye(4)
    T[:3, 3] = (2.0, 0.0, 0.0)
    far = w.with_pose(T @ w.T)
    v, q = motion.classify_grasp(GraspPose(0, 0.1, 0.0), far, scene.robot, scene.env)
    assert v == GraspVerdict.IK_INFEASIBLE and q is None


def test_available_verdicts_pass_independent_checks(scene):
    sc = motion.scene_for(scene.robot, scene.env, scene.machine, scene.steps[0].posed.placement.direction)
    counts = {v: 0 for v in GraspVerdict}
    for st_ in scene.steps[:3]:
        for g in scene.grasps:
            v, q = motion.classify_grasp(g, st_.posed, scene.robot, scene.env, scene=sc, after=st_.bent)
            counts[v] += 1
            if v != GraspVerdict.AVAILABLE:
                continue
            T = motion.grasp_transform(st_.posed, g)
            assert motion.within_tolerance(scene.robot, q, T) and scene.robot.within_limits(q)
            assert robot_clearance(sc, scene.robot, q, motion.HeldWire.attach(st_.posed, g)) >= -1e-9
    assert all(counts.values())


def test_ik_infeasible_verdicts_confirmed_by_many_seeds(scene):
    least_squares = pytest.importorskip("scipy.optimize").least_squares
    Rotation = pytest.importorskip("scipy.spatial.transform").Rotation
    robot = scene.robot
    st3 = scene.steps[3]
    sc = motion.scene_for(robot, scene.env, scene.machine, st3.posed.placement.direction)
    rng = np.random.default_rng(7)

    def resid(q, T):
        F = robot.fk(q)
        return np.concatenate([F[:3, 3] - T[:3, 3], 0.1 * Rotation.from_matrix(T[:3, :3].T @ F[:3, :3]).as_rotvec()])

    checked = 0
    for g in scene.grasps:
        v, _ = motion.classify_grasp(g, st3.posed, robot, scene.env, scene=sc, after=st3.bent)
        if v != GraspVerdict.IK_INFEASIBLE:
            continue
        checked += 1
        T = motion.grasp_transform(st3.posed, g)
        held = motion.HeldWire.attach(st3.posed, g)
        for _ in range(50):
            x = least_squares(resid, robot.random_config(rng), args=(T,), bounds=(robot._lo, robot._hi)).x
            if motion.within_tolerance(robot, x, T):
                assert robot_clearance(sc, robot, x, held) < 1e-6
    assert checked >= 3


@given(st.lists(st.dictionaries(st.integers(0, 20), st.sampled_from(list(GraspVerdict)), max_size=21),
                min_size=1, max_size=6))
def test_common_grasps_is_set_intersection(tables):
    want = set(range(21))
    for t in tables:
        want &= {k for k, v in t.items() if v == GraspVerdict.AVAILABLE}
    assert motion.common_grasps(tables) == want


def test_common_grasps_needs_a_pose():
    with pytest.raises(ValueError):
        motion.common_grasps([])


def test_default_grasp_layout():
    gs = motion.default_grasps(0.3, positions=3, rolls=4, margin=0.015)
    assert len(gs) == 12 and [g.id for g in gs] == list(range(12))
    assert all(0.015 < g.s < 0.285 for g in gs)
    with pytest.raises(ValueError):
        GraspPose(0, 0.5, 0.0).validate(0.3, 0.0016)
    with pytest.raises(ValueError):
        GraspPose(0, 0.1, 0.0, jaw_width=0.001).validate(0.3, 0.0016)


# ---- joint paths


def _assert_valid_path(tr, start, goal, sc, robot, held=None, every=5):
    W = tr.waypoints
    assert np.allclose(W[0], start) and np.allclose(W[-1], goal)
    assert np.abs(np.diff(W, axis=0)).max(initial=0.0) <= tr.max_step + 1e-12
    assert all(robot.within_limits(q) for q in W)
    for q in W[::every]:
        assert robot_clearance(sc, robot, q, held) >= -1e-9


def test_path_start_equals_goal(scene):
    q = np.asarray(scene.robot.home)
    tr = motion.plan_joint_path(scene.robot, q, q, env=scene.env)
    assert len(tr) == 1


def test_path_rejects_colliding_endpoint(scene, rng):
    robot = scene.robot
    sc = motion.scene_for(robot, scene.env, scene.machine)
    bad = next(q for q in (robot.random_config(rng) for _ in range(1000)) if not sc.config_clear(q))
    with pytest.raises(CollidingEndpoint):
        motion.plan_joint_path(robot, robot.home, bad, scene=sc)


def test_path_between_grasp_configs_around_obstacles(scene):
    robot = scene.robot
    sc = motion.scene_for(robot, scene.env, scene.machine, scene.steps[0].posed.placement.direction)
    cfgs = [np.asarray(robot.home, float)]
    for st_ in scene.steps:
        for g in scene.grasps:
            _, q = motion.classify_grasp(g, st_.posed, robot, scene.env, scene=sc, after=st_.bent)
            if q is not None:
                cfgs.append(q)
    pairs = [(a, b) for i, a in enumerate(cfgs) for b in cfgs[i + 1:]
             if not motion._edge_clear(sc.config_clear, a, b, motion.PATH_RESOLUTION)][:4]
    assert len(pairs) == 4
    for a, b in pairs:
        tr = motion.plan_joint_path(robot, a, b, scene=sc, rng=np.random.default_rng(1))
        _assert_valid_path(tr, a, b, sc, robot)


def test_direct_path_when_unobstructed(scene):
    robot = scene.robot
    a = np.asarray(robot.home, float)
    b = a + 0.05
    tr = motion.plan_joint_path(robot, a, b, env=scene.env)
    expect = motion.densify([a, b])
    assert np.allclose(tr.waypoints, expect)


# ---- manipulation


def test_no_grasps_means_no_common_grasp(scene):
    st0 = scene.steps[0]
    r = motion.plan_manipulation([(st0.posed, st0.bent)], [], scene.robot, scene.env, scene.machine)
    assert not r.ok and r.fail_step == 0 and r.reason.startswith("NoCommonGrasp")


def test_single_pose_is_pick_only(scene):
    st0 = scene.steps[0]
    r = motion.plan_manipulation([(st0.posed, st0.bent)], scene.grasps, scene.robot, scene.env, scene.machine)
    assert r.ok and len(r.trajectories) == 1 and len(r.configs) == 1
    sc = motion.scene_for(scene.robot, scene.env, scene.machine, st0.posed.placement.direction)
    _assert_valid_path(r.trajectories[0], scene.robot.home, r.configs[0], sc, scene.robot)


def test_two_poses_share_one_grasp(scene):
    poses = [(s.posed, s.bent) for s in scene.steps[:2]]
    r = motion.plan_manipulation(poses, scene.grasps, scene.robot, scene.env, scene.machine)
    assert r.ok and len(r.trajectories) == 2
    for table in r.verdicts:
        assert table[r.grasp] == GraspVerdict.AVAILABLE
    g = scene.grasps[r.grasp]
    held = motion.HeldWire.attach(poses[0][1], g)
    sc = motion.scene_for(scene.robot, scene.env, scene.machine, poses[1][0].placement.direction)
    _assert_valid_path(r.trajectories[1], r.configs[0], r.configs[1], sc, scene.robot, held)


def test_failure_step_is_the_deepest_reached(scene):
    poses = [(s.posed, s.bent) for s in scene.steps]
    grasps = [g for g in scene.grasps if g.id in (0, 1)]
    r = motion.plan_manipulation(poses, grasps, scene.robot, scene.env, scene.machine)
    assert not r.ok and r.reason == "NoCommonGrasp" and r.fail_step == 2


def test_planner_caches_repeated_queries(scene):
    poses = [(s.posed, s.bent) for s in scene.steps[:2]]
    mp = motion.ManipulationPlanner(scene.robot, scene.env, scene.grasps, scene.machine)
    a = mp.plan(poses)
    n_v, n_p = len(mp._verdicts), len(mp._paths)
    b = mp.plan(poses)
    assert (len(mp._verdicts), len(mp._paths)) == (n_v, n_p)
    assert a.grasp == b.grasp and all(np.array_equal(x.waypoints, y.waypoints)
                                      for x, y in zip(a.trajectories, b.trajectories))
