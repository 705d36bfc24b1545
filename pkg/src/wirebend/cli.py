"""Command-line entry point: approximate, plan, benchmark, replay, export-mesh."""
import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import benchmark, io, motion, sim
from .bendset import WireSpec, compute_bending_set, developed_length
from .errors import ConfigError, DivergenceFound, ParseError, WireBendError
from .geometry import point_polyline_distance, rdp_simplify
from .planner import BendingProblem, prune_search
from .replay import replay_plan

log = logging.getLogger("wirebend")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_TIMEOUT = 0, 1, 2, 3
STATUS_EXIT = {"success": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "timeout": EXIT_TIMEOUT}


# ---------------------------------------------------------------- operations


def approximate(points, epsilon, r_c, diameter, min_bend_angle=math.radians(0.5)):
    """Simplify a dense curve and extract its bending set.

    Returns ``(bends, provenance)``; provenance carries the point counts and
    the largest distance from a dense point to the simplified polyline.
    """
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    kept = rdp_simplify(points, epsilon)
    dev = float(point_polyline_distance(points, kept).max())
    probe = compute_bending_set(kept, r_c, WireSpec(diameter, 1.0), min_bend_angle)
    bends = compute_bending_set(kept, r_c, WireSpec(diameter, developed_length(probe)), min_bend_angle)
    prov = {"epsilon": epsilon, "input_points": len(points), "kept_points": len(kept), "max_deviation": dev}
    return bends, prov


def cmd_approximate(curve_path, epsilon, out_path, r_c=0.006, diameter=0.0016):
    points = io.read_curve(curve_path)
    bends, prov = approximate(points, epsilon, r_c, diameter)
    prov["curve_digest"] = io.digest(Path(curve_path).read_bytes())
    if not bends.candidates:
        log.warning("curve is straight within epsilon: the bending set is empty")
    Path(out_path).write_text(io.dumps(io.bendset_to_dict(bends, prov)))
    print(f"bends: {len(bends.candidates)}  points: {prov['input_points']} -> {prov['kept_points']}  "
          f"max deviation: {prov['max_deviation']:.3e} m (epsilon {epsilon:g})")
    return bends, prov


def build_scene(cfg):
    machine = io.load_machine(cfg.machine)
    robot = io.load_robot(cfg.robot)
    base = np.asarray(robot.base, float)[:3, 3]
    env = sim.default_environment(machine, robot_base=tuple(base))
    return machine, robot, env


def cmd_plan(cfg, out_dir):
    """Plan a project end to end; writes plan.json, trace and mesh snapshots."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    machine, robot, env = build_scene(cfg)
    points = io.read_curve(cfg.curve)
    bends, prov = approximate(points, cfg.epsilon, machine.center_radius, cfg.wire_diameter,
                              math.radians(cfg.min_bend_angle_deg))
    if not bends.candidates:
        raise ConfigError("the curve has no bends within epsilon")
    grasps = io.load_grasps(cfg.grasps, bends.wire.total_length)
    problem = BendingProblem(bends, machine, env, cfg.clearance)
    oracle = motion.motion_oracle(robot, env, grasps, machine, cfg.seed)
    result = prune_search(problem, oracle, cfg.budget)
    dig = io.digest(Path(cfg.curve).read_bytes(), Path(cfg.machine).read_bytes(), Path(cfg.robot).read_bytes(),
                    Path(cfg.grasps).read_bytes(),
                    io.dumps({"epsilon": cfg.epsilon, "wire_diameter": cfg.wire_diameter, "budget": cfg.budget,
                              "clearance": cfg.clearance, "seed": cfg.seed,
                              "min_bend_angle_deg": cfg.min_bend_angle_deg}))
    doc = io.plan_document(result, problem, robot, grasps, dig, cfg.seed)
    doc.stats["approximation"] = prov
    (out_dir / "plan.json").write_text(doc.dumps())
    if result.ok:
        for k, w in enumerate(_snapshots(result)):
            (out_dir / f"snapshot_{k:02d}.stl").write_text(io.wire_stl(w, f"snapshot_{k:02d}"))
    else:
        (out_dir / "trace.json").write_text(io.dumps({"status": result.status, "reason": result.reason,
                                                      "trace": doc.trace}))
    print(f"{result.status}: {result.reason or 'order ' + str(result.sequence.order)}  "
          f"(sequences {result.stats.sequences_evaluated}, simulations {result.stats.nodes_explored}, "
          f"{result.stats.wall_time:.2f} s)")
    return result, doc


def _snapshots(result):
    """Wire before the first bend, then after every bend."""
    out = [result.steps[0].posed]
    out.extend(s.bent for s in result.steps)
    return out


def cmd_benchmark(machine, env, out_dir, groups=range(3, 9), per_group=10, seed=0, budget=120.0, robot=None,
                  grasp_spec=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    factory = None
    if robot is not None:
        def factory(problem):
            grasps = io.grasps_from_dict(grasp_spec or {"generate": {}}, problem.bends.wire.total_length)
            return motion.motion_oracle(robot, env, grasps, machine, seed)

    def progress(r):
        log.info("n=%d #%d %s %.2fs", r.group, r.instance, r.status, r.wall_time)

    report = benchmark.run_benchmark(machine, env, groups, per_group, seed, budget, factory, progress=progress)
    (out_dir / "report.json").write_text(io.dumps(report.to_dict(timings=False)))
    # wall times vary run to run, so they stay out of the table file
    (out_dir / "table.txt").write_text(report.table(timings=False) + "\n")
    for status in ("success", "failure"):
        lines = ["bends wall_time_s"]
        for n, rs in sorted(report.groups.items()):
            for r in rs:
                if (r.status == "success") == (status == "success"):
                    lines.append(f"{n} {r.wall_time:.6f}")
        (out_dir / f"times_{status}.txt").write_text("\n".join(lines) + "\n")
    print(report.table())
    return report


def cmd_replay(plan_path):
    doc = io.read_plan(plan_path)
    replay_plan(doc)
    print(f"replay OK: {len(doc.steps)} steps, {sum(len(t) for t in doc.trajectories)} waypoints")
    return True


def cmd_export_mesh(path, out_dir):
    """Mesh snapshots from a plan document, or the finished shape of a bending set."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    d = json.loads(Path(path).read_text())
    written = []
    if d.get("kind") == "bending_set":
        from .bendset import layout
        bends = io.bendset_from_dict(d)
        w = sim.final_shape(bends, layout(bends))
        p = out_dir / "shape.stl"
        p.write_text(io.wire_stl(w, "shape"))
        written.append(p)
    else:
        doc = io.PlanDocument.from_dict(d)
        bends = io.bendset_from_dict(doc.bends)
        if not doc.steps:
            raise ConfigError("plan has no steps to export")
        recs = [doc.steps[0]["posed"]] + [s["bent"] for s in doc.steps]
        for k, rec in enumerate(recs):
            p = out_dir / f"snapshot_{k:02d}.stl"
            p.write_text(io.wire_stl(io.wire_from_record(rec, bends), f"snapshot_{k:02d}"))
            written.append(p)
    print(f"wrote {len(written)} mesh file(s) to {out_dir}")
    return written


# ---------------------------------------------------------------- argument parsing


def _parser():
    p = argparse.ArgumentParser(prog="wirebend", description="Plan robotic wire bending with an external machine.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    a = sub.add_parser("approximate", help="simplify a curve file into a bending set")
    a.add_argument("curve", help="polyline text file, one x y z point per line (meters)")
    a.add_argument("--epsilon", type=float, default=0.001, help="max deviation from the curve (m)")
    a.add_argument("--center-radius", type=float, default=0.006, help="bend radius at the wire axis (m)")
    a.add_argument("--diameter", type=float, default=0.0016, help="wire diameter (m)")
    a.add_argument("--out-dir", default=".")

    pl = sub.add_parser("plan", help="plan a project config end to end")
    pl.add_argument("config", help="project JSON; bare names are looked up in the config directory")
    pl.add_argument("--epsilon", type=float, help="override the project simplification tolerance")
    pl.add_argument("--budget", type=float, help="search time limit (s)")
    pl.add_argument("--seed", type=int, help="seed for sampling-based motion planning")
    pl.add_argument("--clearance", type=float, help="required gap between the wire and obstacles (m)")
    pl.add_argument("--out-dir", default="plan_out")

    b = sub.add_parser("benchmark", help="run the randomised sequence-planning benchmark")
    b.add_argument("--groups", default="3-8", help="bend counts, e.g. 3-8 or 3,5")
    b.add_argument("--per-group", type=int, default=10, help="instances per bend count")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--budget", type=float, default=120.0, help="time limit per instance (s)")
    b.add_argument("--machine", default="machine.json")
    b.add_argument("--robot", default="robot.json")
    b.add_argument("--grasps", default="grasps.json")
    b.add_argument("--no-motion", action="store_true", help="check bending feasibility only")
    b.add_argument("--out-dir", default="benchmark_out")

    r = sub.add_parser("replay", help="re-simulate a plan document")
    r.add_argument("plan", help="plan.json written by the plan command")

    e = sub.add_parser("export-mesh", help="write STL meshes for a plan or bending set")
    e.add_argument("file", help="plan.json or bendset.json")
    e.add_argument("--out-dir", default="meshes")
    return p


def _groups(spec):
    try:
        if "-" in spec:
            lo, hi = spec.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in spec.split(",")]
    except ValueError:
        raise ConfigError(f"bad group list {spec!r}") from None


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.cmd == "approximate":
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            cmd_approximate(args.curve, args.epsilon, out / (Path(args.curve).stem + ".bends.json"),
                            args.center_radius, args.diameter)
            return EXIT_OK
        if args.cmd == "plan":
            cfg = io.load_project(args.config, epsilon=args.epsilon, budget=args.budget, seed=args.seed,
                                  clearance=args.clearance)
            result, _ = cmd_plan(cfg, args.out_dir)
            return STATUS_EXIT[result.status]
        if args.cmd == "benchmark":
            machine = io.load_machine(io.resolve_config_path(args.machine))
            robot = None if args.no_motion else io.load_robot(io.resolve_config_path(args.robot))
            grasp_spec = None if args.no_motion else io._load_json(io.resolve_config_path(args.grasps))
            base = tuple(np.asarray(robot.base)[:3, 3]) if robot is not None else (0.0, 0.0, 0.0)
            env = sim.default_environment(machine, robot_base=base)
            cmd_benchmark(machine, env, args.out_dir, _groups(args.groups), args.per_group, args.seed, args.budget,
                          robot, grasp_spec)
            return EXIT_OK
        if args.cmd == "replay":
            cmd_replay(args.plan)
            return EXIT_OK
        if args.cmd == "export-mesh":
            cmd_export_mesh(args.file, args.out_dir)
            return EXIT_OK
    except DivergenceFound as exc:
        print(f"replay diverged: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except WireBendError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
