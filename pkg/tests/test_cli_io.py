import json
import logging
import math
import shutil

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wirebend import io, motion, sim
from wirebend.benchmark import MIN_SPACING, default_machine, random_bend_set, run_benchmark
from wirebend.bendset import layout, reconstruct_pivots
from wirebend.cli import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, approximate, build_scene, cmd_approximate, main
from wirebend.errors import ConfigError, DivergenceFound, ParseError
from wirebend.planner import BendingProblem, exhaustive_search
from wirebend.replay import replay_plan



def dense_polyline(corners, step=0.001):
    """Points every ``step`` metres along straight runs between corners."""
    out = [np.asarray(corners[0], float)]
    for a, b in zip(corners[:-1], corners[1:]):
        a, b = np.asarray(a, float), np.asarray(b, float)
        k = max(1, int(round(np.linalg.norm(b - a) / step)))
        out.extend(a + (b - a) * (j / k) for j in range(1, k + 1))
    return np.array(out)


def square_helix(sides, lead=0.1, side=0.05, rise=math.radians(20)):
    pts = [np.zeros(3), np.array([lead, 0, 0])]
    heading = 0.0
    for _ in range(sides):
        heading += math.pi / 2
        d = np.array([math.cos(heading) * math.cos(rise), math.sin(heading) * math.cos(rise), math.sin(rise)])
        pts.append(pts[-1] + side * d)
    return np.array(pts)


def write_project(tmp_path, curve_pts, **extra):
    for f in ("machine.json", "robot.json", "grasps.json"):
        shutil.copy(io.DATA_DIR / f, tmp_path / f)
    (tmp_path / "curve.txt").write_text(io.format_curve(curve_pts))
    d = {"curve": "curve.txt", "machine": "machine.json", "robot": "robot.json", "grasps": "grasps.json",
         "epsilon": 1e-5, "wire_diameter": 0.0016, "budget": 120, "seed": 0}
    d.update(extra)
    (tmp_path / "project.json").write_text(json.dumps(d))
    return tmp_path / "project.json"


# ---- curve files


def test_parse_curve_formats():
    pts = io.parse_curve("# header\n0 0 0\n1, 0, 0  # comment\n\n1 1 0\n")
    assert np.array_equal(pts, [[0, 0, 0], [1, 0, 0], [1, 1, 0]])


@pytest.mark.parametrize("text, line", [
    ("0 0 0\n1 0\n", 2),
    ("0 0 0\n1 0 x\n", 2),
    ("0 0 0\n\n1 0 nan\n", 3),
    ("0 0 0\n0 0 0\n", 2),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as exc:
        io.parse_curve(text)
    assert exc.value.line == line and f"line {line}" in str(exc.value)


def test_parse_needs_two_points():
    with pytest.raises(ParseError):
        io.parse_curve("1 2 3\n")


@given(st.integers(0, 2**32 - 1), st.integers(2, 50))
def test_curve_text_round_trip(seed, n):
    pts = np.cumsum(np.random.default_rng(seed).normal(size=(n, 3)), axis=0)
    assert np.array_equal(io.parse_curve(io.format_curve(pts)), pts)


# ---- schema round trips


def test_machine_round_trip():
    m = io.load_machine(io.DATA_DIR / "machine.json")
    assert io.machine_from_dict(json.loads(io.dumps(io.machine_to_dict(m)))) == m


def test_robot_round_trip(rng):
    r = io.load_robot(io.DATA_DIR / "robot.json")
    r2 = io.robot_from_dict(json.loads(io.dumps(io.robot_to_dict(r))))
    assert io.robot_to_dict(r2) == io.robot_to_dict(r)
    for _ in range(10):
        q = r.random_config(rng)
        assert np.array_equal(r.fk(q), r2.fk(q))


def test_grasps_round_trip():
    g = io.load_grasps(io.DATA_DIR / "grasps.json", 0.3)
    assert io.grasps_from_dict(json.loads(io.dumps(io.grasps_to_dict(g)))) == g


@given(st.integers(0, 2**32 - 1), st.integers(3, 8))
def test_bendset_round_trip(seed, n):
    bs = random_bend_set(n, np.random.default_rng(seed))
    assert io.bendset_from_dict(json.loads(io.dumps(io.bendset_to_dict(bs)))) == bs


def test_config_errors():
    with pytest.raises(ConfigError):
        io.machine_from_dict({"center_radius": 0.006, "bogus": 1})
    with pytest.raises(ConfigError):
        io.machine_from_dict({"center_radius": -1.0})
    with pytest.raises(ConfigError):
        io.robot_from_dict({"preset": "nope"})
    with pytest.raises(ConfigError):
        io.robot_from_dict({"preset": "ur3e", "base": {"rotation": [[2, 0, 0], [0, 1, 0], [0, 0, 1]]}})
    with pytest.raises(ConfigError):
        io.grasps_from_dict({"grasps": [{"id": 1, "s": 0.1}, {"id": 1, "s": 0.2}]})
    with pytest.raises(ConfigError):
        io.resolve_config_path("no_such_file.json")


def test_config_dir_env_var(tmp_path, monkeypatch):
    (tmp_path / "m.json").write_text(json.dumps({"center_radius": 0.007}))
    monkeypatch.setenv(io.CONFIG_DIR_ENV, str(tmp_path))
    assert io.load_machine(io.resolve_config_path("m.json")).center_radius == 0.007


def test_stl_round_trip():
    bs = random_bend_set(3, np.random.default_rng(0))
    w = sim.final_shape(bs, layout(bs))
    pts, _ = w.polyline()
    tris = io.tube_mesh(pts, w.diameter / 2.0)
    back = io.parse_stl(io.stl_text(tris))
    assert back.shape == tris.shape and np.abs(back - tris).max() < 1e-9 * max(1.0, np.abs(tris).max())


# ---- approximate


def test_straight_curve_gives_empty_set_with_warning(tmp_path, caplog):
    path = tmp_path / "line.txt"
    path.write_text(io.format_curve(dense_polyline([[0, 0, 0], [0.2, 0, 0]])))
    with caplog.at_level(logging.WARNING, logger="wirebend"):
        bends, _ = cmd_approximate(path, 0.001, tmp_path / "out.json")
    assert len(bends) == 0 and "empty" in caplog.text
    assert json.loads((tmp_path / "out.json").read_text())["candidates"] == []


def test_l_curve_gives_one_right_angle(tmp_path):
    path = tmp_path / "l.txt"
    path.write_text(io.format_curve(dense_polyline([[0, 0, 0], [1, 0, 0], [1, 1, 0]])))
    bends, prov = cmd_approximate(path, 0.001, tmp_path / "out.json", r_c=0.01)
    (c,) = bends.candidates
    assert c.theta == pytest.approx(math.pi / 2, abs=1e-9) and c.alpha == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(c.q, [0.99, 0, 0], atol=1e-9)
    doc = json.loads((tmp_path / "out.json").read_text())
    assert doc["provenance"]["epsilon"] == 0.001 and doc["provenance"]["input_points"] == 2001
    assert doc["provenance"]["kept_points"] == 3 and "curve_digest" in doc["provenance"]


def test_spatial_curve_with_five_bends_round_trips():
    corners = square_helix(5)
    dense = dense_polyline(corners)
    eps = 5e-4
    bends, prov = approximate(dense, eps, 0.006, 0.0016)
    assert len(bends) == 5 and prov["max_deviation"] <= eps
    back = reconstruct_pivots(bends, (corners[0], corners[1]))
    assert np.abs(back - corners).max() < 1e-6


def test_approximate_cli_exit_codes(tmp_path):
    good = tmp_path / "c.txt"
    good.write_text(io.format_curve(dense_polyline([[0, 0, 0], [0.1, 0, 0], [0.1, 0.1, 0]])))
    assert main(["approximate", str(good), "--out-dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "c.bends.json").exists()
    bad = tmp_path / "bad.txt"
    bad.write_text("0 0 0\n1 2\n")
    assert main(["approximate", str(bad), "--out-dir", str(tmp_path)]) == EXIT_ERROR


# ---- plan and replay


def test_one_bend_plan_writes_two_snapshots(tmp_path):
    pts = dense_polyline([[0, 0, 0], [0.1, 0, 0], [0.1, 0.05, 0]])
    cfg = write_project(tmp_path, pts, epsilon=5e-4)
    out = tmp_path / "out"
    assert main(["plan", str(cfg), "--out-dir", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.glob("*.stl")) == ["snapshot_00.stl", "snapshot_01.stl"]
    assert main(["replay", str(out / "plan.json")]) == EXIT_OK


def test_unreachable_machine_is_infeasible_with_trace(tmp_path):
    pts = dense_polyline([[0, 0, 0], [0.1, 0, 0], [0.1, 0.05, 0]])
    cfg = write_project(tmp_path, pts, epsilon=5e-4)
    m = json.loads((tmp_path / "machine.json").read_text())
    m["frame"][0][3] = 2.32  # two metres beyond the usual placement
    (tmp_path / "machine.json").write_text(json.dumps(m))
    out = tmp_path / "out"
    assert main(["plan", str(cfg), "--out-dir", str(out)]) == EXIT_INFEASIBLE
    trace = json.loads((out / "trace.json").read_text())
    assert trace["status"] == "infeasible" and len(trace["trace"]) == 4
    assert all(r["fail_step"] == 0 and r["reason"].startswith("motion") for r in trace["trace"])
    assert not list(out.glob("*.stl"))


def test_reorder_project_plans_021(tmp_path):
    bs = random_bend_set(3, np.random.default_rng(123))
    c0 = bs.candidates[0]
    o = np.array(bs.origin)
    lead = c0.q[0] + bs.r_c * math.tan(c0.turn / 2)
    pts = reconstruct_pivots(bs, (o, o + lead * np.array(bs.first_direction)))
    cfg = write_project(tmp_path, pts)
    out = tmp_path / "out"
    assert main(["plan", str(cfg), "--out-dir", str(out)]) == EXIT_OK
    doc = io.read_plan(out / "plan.json")
    assert [s["index"] for s in doc.steps] == [0, 2, 1]
    config = io.load_project(str(cfg))
    machine, robot, env = build_scene(config)
    bends = io.bendset_from_dict(doc.bends)
    grasps = io.load_grasps(config.grasps, bends.wire.total_length)
    feasible, seq, _ = exhaustive_search(BendingProblem(bends, machine, env, config.clearance),
                                         motion.motion_oracle(robot, env, grasps, machine, config.seed))
    assert feasible and seq.keys() == tuple((s["index"], s["choice"]) for s in doc.steps)


@pytest.fixture(scope="module")
def planned(tmp_path_factory):
    out = tmp_path_factory.mktemp("plan2d")
    assert main(["plan", "project_2d.json", "--out-dir", str(out)]) == EXIT_OK
    return out


def test_plan_document_round_trip(planned):
    text = (planned / "plan.json").read_text()
    doc = io.read_plan(planned / "plan.json")
    assert doc.dumps() == text


def test_replay_fresh_plan(planned):
    assert replay_plan(io.read_plan(planned / "plan.json"))


@pytest.mark.parametrize("edit", ["angle", "achieved", "config", "waypoint"])
def test_replay_detects_tampering(planned, tmp_path, edit):
    d = json.loads((planned / "plan.json").read_text())
    if edit == "angle":
        d["bends"]["candidates"][1]["theta"] += 0.01
    elif edit == "achieved":
        d["steps"][1]["achieved"] += 1e-6
    elif edit == "config":
        d["steps"][0]["config"][0] += 0.05
    else:
        d["trajectories"][1][len(d["trajectories"][1]) // 2][1] += 0.5
    with pytest.raises(DivergenceFound):
        replay_plan(io.PlanDocument.from_dict(d))
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    assert main(["replay", str(p)]) == EXIT_INFEASIBLE


def test_plan_is_byte_identical_on_rerun(planned, tmp_path):
    assert main(["plan", "project_2d.json", "--out-dir", str(tmp_path)]) == EXIT_OK
    for f in planned.iterdir():
        assert (tmp_path / f.name).read_bytes() == f.read_bytes()


def test_export_mesh(planned, tmp_path):
    assert main(["export-mesh", str(planned / "plan.json"), "--out-dir", str(tmp_path)]) == EXIT_OK
    n_steps = len(io.read_plan(planned / "plan.json").steps)
    assert len(list(tmp_path.glob("snapshot_*.stl"))) == n_steps + 1
    assert (tmp_path / "snapshot_00.stl").read_bytes() == (planned / "snapshot_00.stl").read_bytes()


def test_missing_and_malformed_configs(tmp_path):
    assert main(["plan", str(tmp_path / "missing.json")]) == EXIT_ERROR
    (tmp_path / "broken.json").write_text("{\n  \"curve\": \n")
    assert main(["plan", str(tmp_path / "broken.json")]) == EXIT_ERROR
    (tmp_path / "odd.json").write_text(json.dumps({"curve": "c.txt", "mystery": 1}))
    assert main(["plan", str(tmp_path / "odd.json")]) == EXIT_ERROR


# ---- benchmark


def test_benchmark_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["benchmark", "--groups", "3", "--per-group", "1", "--no-motion", "--out-dir", str(out)]) \
            == EXIT_OK
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "table.txt").read_bytes() == (b / "table.txt").read_bytes()


def test_benchmark_instances_respect_spacing_and_ranges():
    rng = np.random.default_rng(0)
    for n in range(3, 9):
        for _ in range(20):
            bs = random_bend_set(n, rng)
            assert len(bs) == n
            lay = layout(bs)
            # straight run between neighbouring arcs is at least the minimum spacing
            for a, b in zip(lay[:-1], lay[1:]):
                assert b.start - a.end(bs.r_c) >= MIN_SPACING - 1e-9
            for theta, alpha, beta in bs.meta["params"]:
                assert -math.pi <= theta <= math.pi and -math.pi <= alpha <= math.pi
                assert abs(beta) <= math.pi / 18


def test_benchmark_report_layout():
    m = default_machine()
    rep = run_benchmark(m, sim.default_environment(m), groups=[3, 4], per_group=2, seed=1, budget=30)
    assert sorted(rep.groups) == [3, 4] and all(len(v) == 2 for v in rep.groups.values())
    table = rep.table()
    assert "success" in table.lower() and len(table.splitlines()) >= 3
    assert rep.to_dict(timings=False) == run_benchmark(m, sim.default_environment(m), groups=[3, 4], per_group=2,
                                                       seed=1, budget=30).to_dict(timings=False)
