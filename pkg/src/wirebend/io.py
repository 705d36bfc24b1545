"""File formats: curves, configs, bending sets, plan documents and meshes.

Configs and plans are JSON. Curves are plain text with one ``x y z`` point
per line (commas also accepted, ``#`` starts a comment). Meshes are ASCII
STL. Floats are written with ``repr`` precision so every file parses back
to an equal value.
"""
from dataclasses import asdict, dataclass, field, fields
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from . import motion, sim
from .bendset import BendCandidate, BendSet, WireSpec
from .errors import ConfigError, ParseError

FORMAT_VERSION = 1
CONFIG_DIR_ENV = "WIREBEND_CONFIG_DIR"
DATA_DIR = Path(__file__).parent / "data"


# ---------------------------------------------------------------- curves


def parse_curve(text):
    """Points from curve text; raises ParseError with the offending line number."""
    pts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ParseError(f"expected 3 coordinates, got {len(parts)}", lineno)
        try:
            p = [float(v) for v in parts]
        except ValueError:
            raise ParseError(f"not a number in {line!r}", lineno) from None
        if not all(math.isfinite(v) for v in p):
            raise ParseError("non-finite coordinate", lineno)
        if pts and max(abs(a - b) for a, b in zip(p, pts[-1][1])) <= 1e-9:
            raise ParseError("point repeats the previous one", lineno)
        pts.append((lineno, p))
    if len(pts) < 2:
        raise ParseError("a curve needs at least 2 points")
    return np.array([p for _, p in pts])


def read_curve(path):
    return parse_curve(Path(path).read_text())


def format_curve(points):
    return "".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in np.asarray(points, float).tolist())


# ---------------------------------------------------------------- json helpers


def dumps(obj):
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _matrix(value, what):
    a = np.asarray(value, float)
    if a.shape != (4, 4) or not np.all(np.isfinite(a)):
        raise ConfigError(f"{what} must be a finite 4x4 matrix")
    return tuple(map(tuple, a.tolist()))


def _pose(spec, what):
    """Rigid transform from a 4x4 matrix or {translation, rotation} pair."""
    if spec is None:
        return tuple(map(tuple, np.eye(4).tolist()))
    if isinstance(spec, dict):
        T = np.eye(4)
        T[:3, 3] = spec.get("translation", (0.0, 0.0, 0.0))
        if "rotation" in spec:
            T[:3, :3] = spec["rotation"]
        elif "yaw_deg" in spec:
            c, s = math.cos(math.radians(spec["yaw_deg"])), math.sin(math.radians(spec["yaw_deg"]))
            T[:3, :3] = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
        spec = T
    T = np.asarray(_matrix(spec, what))
    R = T[:3, :3]
    if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or np.linalg.det(R) < 0:
        raise ConfigError(f"{what} rotation is not a proper rotation")
    return tuple(map(tuple, T.tolist()))


# ---------------------------------------------------------------- machine


def machine_from_dict(d):
    d = dict(d)
    known = {f.name for f in fields(sim.MachineModel)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown machine keys: {sorted(unknown)}")
    if "frame" in d:
        d["frame"] = _pose(d["frame"], "machine frame")
    if "housing_half" in d:
        d["housing_half"] = tuple(float(v) for v in d["housing_half"])
    m = sim.MachineModel(**d)
    for k in ("center_radius", "punch_radius", "roller_gap", "punch_limit", "die_offset", "die_radius"):
        if not getattr(m, k) > 0:
            raise ConfigError(f"machine {k} must be positive")
    return m


def machine_to_dict(m):
    d = asdict(m)
    d["frame"] = [list(r) for r in m.frame]
    d["housing_half"] = list(m.housing_half)
    return d


def load_machine(path):
    return machine_from_dict(_load_json(path))


# ---------------------------------------------------------------- robot


def robot_from_dict(d):
    base = _pose(d.get("base"), "robot base")
    if d.get("preset") == "ur3e":
        grip = d.get("gripper")
        r = motion.ur3e(np.asarray(base), [tuple(map(tuple, g[:2])) + (float(g[2]),) for g in grip] if grip else None)
        if "home" in d:
            r = _replace_robot(r, home=tuple(float(v) for v in d["home"]))
        return r
    if "preset" in d:
        raise ConfigError(f"unknown robot preset {d['preset']!r}")
    try:
        joints = d["joints"]
        offsets = tuple(_matrix(j["offset"], "joint offset") for j in joints)
        axes = tuple(tuple(float(v) for v in j["axis"]) for j in joints)
        lower = tuple(float(j["lower"]) for j in joints)
        upper = tuple(float(j["upper"]) for j in joints)
        caps = tuple(
            motion.LinkCapsule(int(c["link"]), tuple(c["a"]), tuple(c["b"]), float(c["radius"]),
                               tuple(c.get("ignore", ())))
            for c in d.get("capsules", ())
        )
        grip = tuple((tuple(g[0]), tuple(g[1]), float(g[2])) for g in d.get("gripper", motion.default_gripper()))
        return motion.RobotModel(offsets, axes, lower, upper, base, _matrix(d.get("tool", np.eye(4)), "tool"),
                                 caps, grip, tuple(d["home"]) if "home" in d else None, d.get("name", "robot"))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed robot description: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _replace_robot(r, **kw):
    from dataclasses import replace
    return replace(r, **kw)


def robot_to_dict(r):
    return {
        "name": r.name,
        "base": [list(row) for row in r.base],
        "tool": [list(row) for row in r.tool],
        "joints": [
            {"offset": [list(row) for row in o], "axis": list(a), "lower": lo, "upper": hi}
            for o, a, lo, hi in zip(r.offsets, r.axes, r.lower, r.upper)
        ],
        "capsules": [
            {"link": c.link, "a": list(c.a), "b": list(c.b), "radius": c.radius, "ignore": list(c.ignore)}
            for c in r.capsules
        ],
        "gripper": [[list(a), list(b), rad] for a, b, rad in r.gripper],
        **({"home": list(r.home)} if r.home is not None else {}),
    }


def load_robot(path):
    return robot_from_dict(_load_json(path))


# ---------------------------------------------------------------- grasps


def grasps_from_dict(d, wire_length=None):
    if "generate" in d:
        if wire_length is None:
            raise ConfigError("generated grasps need the wire length")
        g = d["generate"]
        return motion.default_grasps(wire_length, int(g.get("positions", 6)), int(g.get("rolls", 8)),
                                     float(g.get("margin", 0.015)), float(g.get("jaw_width", 0.01)))
    out = []
    for i, g in enumerate(d.get("grasps", ())):
        try:
            out.append(motion.GraspPose(int(g.get("id", i)), float(g["s"]), float(g.get("roll", 0.0)),
                                        float(g.get("jaw_width", 0.01)), float(g.get("footprint", 0.012))))
        except KeyError as exc:
            raise ConfigError(f"grasp {i} lacks {exc}") from None
    ids = [g.id for g in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("grasp ids must be unique")
    return tuple(out)


def grasps_to_dict(grasps):
    return {"grasps": [asdict(g) for g in grasps]}


def load_grasps(path, wire_length=None):
    return grasps_from_dict(_load_json(path), wire_length)


# ---------------------------------------------------------------- bending sets


def bendset_to_dict(bends, provenance=None):
    return {
        "format": FORMAT_VERSION,
        "kind": "bending_set",
        "provenance": provenance or {},
        "r_c": bends.r_c,
        "wire": {"diameter": bends.wire.diameter, "total_length": bends.wire.total_length},
        "origin": list(bends.origin),
        "first_direction": list(bends.first_direction),
        "reference_normal": list(bends.reference_normal),
        "tail_length": bends.tail_length,
        "candidates": [
            {"index": c.index, "q": list(c.q), "theta": c.theta, "alpha": c.alpha, "beta": c.beta,
             "y_sign": c.y_sign}
            for c in bends.candidates
        ],
    }


def bendset_from_dict(d):
    try:
        cands = tuple(
            BendCandidate(int(c["index"]), tuple(float(v) for v in c["q"]), float(c["theta"]), float(c["alpha"]),
                          float(c["beta"]), float(c["y_sign"]))
            for c in d["candidates"]
        )
        return BendSet(
            cands, float(d["r_c"]), WireSpec(float(d["wire"]["diameter"]), float(d["wire"]["total_length"])),
            tuple(d["origin"]), tuple(d["first_direction"]), tuple(d["reference_normal"]), float(d["tail_length"]),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed bending set: {exc}") from None


# ---------------------------------------------------------------- project config


@dataclass(frozen=True)
class ProjectConfig:
    curve: Path
    epsilon: float
    wire_diameter: float
    machine: Path
    robot: Path
    grasps: Path
    budget: float = 120.0
    clearance: float = sim.DEFAULT_CLEARANCE
    seed: int = 0
    min_bend_angle_deg: float = 0.5
    robot_base: tuple = (0.0, 0.0, 0.0)

    def validate(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.wire_diameter > 0:
            raise ConfigError("wire_diameter must be positive")
        if not self.budget > 0:
            raise ConfigError("budget must be positive")
        if self.clearance < 0:
            raise ConfigError("clearance must be non-negative")
        for k in ("curve", "machine", "robot", "grasps"):
            p = getattr(self, k)
            if not p.is_file():
                raise ConfigError(f"{k} file not found: {p}")
        return self


def resolve_config_path(path):
    """Find a config: as given, then in $WIREBEND_CONFIG_DIR, then in the bundled data."""
    p = Path(path)
    if p.is_file():
        return p
    if not p.is_absolute():
        env = os.environ.get(CONFIG_DIR_ENV)
        for root in ([Path(env)] if env else []) + [DATA_DIR]:
            if (root / p).is_file():
                return root / p
    raise ConfigError(f"config file not found: {path}")


def load_project(path, **overrides):
    path = resolve_config_path(path)
    d = _load_json(path)
    known = {f.name for f in fields(ProjectConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown project keys: {sorted(unknown)}")
    d.update({k: v for k, v in overrides.items() if v is not None})
    root = path.parent
    for k in ("curve", "machine", "robot", "grasps"):
        if k not in d:
            raise ConfigError(f"project config lacks {k!r}")
        d[k] = (root / d[k]) if not Path(d[k]).is_absolute() else Path(d[k])
    for k in ("epsilon", "wire_diameter"):
        if k not in d:
            raise ConfigError(f"project config lacks {k!r}")
    if "robot_base" in d:
        d["robot_base"] = tuple(float(v) for v in d["robot_base"])
    try:
        cfg = ProjectConfig(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def digest(*chunks):
    h = hashlib.sha256()
    for c in chunks:
        h.update(c if isinstance(c, bytes) else c.encode())
    return h.hexdigest()


# ---------------------------------------------------------------- plan documents


def _m(T):
    return [list(map(float, row)) for row in np.asarray(T, float).tolist()]


def wire_record(w):
    return {
        "pose": _m(w.T),
        "arcs": [[a.start, a.turn, a.psi, a.index] for a in w.arcs],
    }


@dataclass
class PlanDocument:
    status: str
    input_digest: str
    bends: dict
    machine: dict
    robot: dict
    clearance: float
    steps: list = field(default_factory=list)
    grasp: dict = None
    trajectories: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    reason: str = None
    trace: list = field(default_factory=list)
    seed: int = 0
    format: int = FORMAT_VERSION

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        missing = {"status", "input_digest", "bends", "machine", "robot", "clearance"} - set(d)
        if missing:
            raise ParseError(f"plan document lacks {sorted(missing)}")
        return cls(**{k: v for k, v in d.items() if k in known})

    def dumps(self):
        return dumps(self.to_dict())


def plan_document(result, problem, robot, grasps, input_digest, seed=0):
    """Serialise a search result. Wall-clock times are left out so equal runs give equal files."""
    steps = []
    if result.sequence is not None:
        for st, ev in zip(result.sequence.steps, result.steps):
            steps.append({
                "index": st.index,
                "choice": st.choice,
                "use_alpha": st.use_alpha,
                "direction": st.direction.value,
                "turn": problem.targets[st.index].turn,
                "achieved": ev.achieved,
                "posed": wire_record(ev.posed),
                "bent": wire_record(ev.bent),
            })
    grasp, trajs = None, []
    mv = result.motion
    if mv is not None and mv.ok:
        g = next(g for g in grasps if g.id == mv.grasp)
        grasp = asdict(g)
        trajs = [[list(map(float, q)) for q in tr.waypoints.tolist()] for tr in mv.trajectories]
        for s, q in zip(steps, mv.configs):
            s["config"] = list(map(float, q))
    stats = {
        "nodes_explored": result.stats.nodes_explored,
        "sequences_evaluated": result.stats.sequences_evaluated,
        "prunes": result.stats.prunes,
        "motion_calls": result.stats.motion_calls,
    }
    trace = [{k: v for k, v in rec.items() if k != "time"} for rec in result.trace]
    return PlanDocument(
        status=result.status, input_digest=input_digest, bends=bendset_to_dict(problem.bends),
        machine=machine_to_dict(problem.machine), robot=robot_to_dict(robot), clearance=problem.clearance,
        steps=steps, grasp=grasp, trajectories=trajs, stats=stats, reason=result.reason, trace=trace, seed=seed,
    )


def read_plan(path):
    return PlanDocument.from_dict(_load_json(path))


# ---------------------------------------------------------------- meshes


def tube_mesh(points, radius, sides=12):
    """Triangles of a tube swept along a polyline (capped at both ends)."""
    P = np.asarray(points, float)
    if len(P) < 2:
        return np.zeros((0, 3, 3))
    t = np.diff(P, axis=0)
    t /= np.linalg.norm(t, axis=1)[:, None]
    tang = np.vstack([t[:1], (t[:-1] + t[1:]), t[-1:]])
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    ref = np.array([0.0, 0.0, 1.0]) if abs(tang[0, 2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(tang[0], ref)
    u /= np.linalg.norm(u)
    rings = []
    for k in range(len(P)):
        u = u - np.dot(u, tang[k]) * tang[k]  # transport the ring frame along the tube
        u /= np.linalg.norm(u)
        v = np.cross(tang[k], u)
        ang = 2.0 * np.pi * np.arange(sides) / sides
        rings.append(P[k] + radius * (np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * v))
    tris = []
    for k in range(len(P) - 1):
        a, b = rings[k], rings[k + 1]
        for j in range(sides):
            j2 = (j + 1) % sides
            tris.append((a[j], a[j2], b[j2]))
            tris.append((a[j], b[j2], b[j]))
    for ring, centre, flip in ((rings[0], P[0], True), (rings[-1], P[-1], False)):
        for j in range(sides):
            j2 = (j + 1) % sides
            tris.append((centre, ring[j2], ring[j]) if flip else (centre, ring[j], ring[j2]))
    return np.array(tris)


def stl_text(triangles, name="wire"):
    out = [f"solid {name}\n"]
    for tri in np.asarray(triangles, float):
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        ln = np.linalg.norm(n)
        n = n / ln if ln > 0 else n
        out.append(f"  facet normal {n[0]:.9e} {n[1]:.9e} {n[2]:.9e}\n    outer loop\n")
        for p in tri:
            out.append(f"      vertex {p[0]:.9e} {p[1]:.9e} {p[2]:.9e}\n")
        out.append("    endloop\n  endfacet\n")
    out.append(f"endsolid {name}\n")
    return "".join(out)


def parse_stl(text):
    """Triangles from ASCII STL text (vertices only)."""
    verts = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if parts and parts[0] == "vertex":
            try:
                verts.append([float(v) for v in parts[1:4]])
            except ValueError:
                raise ParseError("bad vertex", lineno) from None
    if len(verts) % 3:
        raise ParseError("vertex count is not a multiple of 3")
    return np.array(verts).reshape(-1, 3, 3)


def wire_stl(wire, name="wire"):
    pts, _ = wire.polyline()
    return stl_text(tube_mesh(pts, wire.diameter / 2.0), name)


def wire_from_record(rec, bends):
    """Rebuild a posed wire state from its plan-document record."""
    w = sim.WireState.straight(bends.wire.total_length, bends.wire.diameter, bends.r_c)
    for start, turn, psi, index in rec["arcs"]:
        w = w.with_arc(start, turn, psi, int(index))
    return w.with_pose(np.asarray(rec["pose"], float))
