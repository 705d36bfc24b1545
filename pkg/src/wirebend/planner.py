"""Bending-sequence search with a failed-prefix tree.

A sequence is an ordering of the bends plus, per step, the bend direction
and whether the wire is placed by its twist (alpha) or lift (beta) reading.
Sequences are tried in lexicographic order; when step ``j`` fails, the
prefix up to ``j`` goes into the tree and every sequence sharing it is
skipped.

Step outcomes depend only on which bends are already on the wire (the
intrinsic shape is order independent), so simulations are memoised by the
executed set and a set whose every continuation fails is remembered as dead.
Motion-level failures depend on the whole pose history and are only ever
stored as prefixes.
"""
from dataclasses import dataclass, field
import logging
import math
import time

from . import sim
from .bendset import layout
from .errors import (
    DiameterTooLarge,
    TargetExceedsWorkRange,
    UnreachablePose,
)
from .sim import BendDirection

log = logging.getLogger(__name__)

# branch order: alpha before beta, CW before CCW
CHOICES = (
    (True, BendDirection.CW),
    (True, BendDirection.CCW),
    (False, BendDirection.CW),
    (False, BendDirection.CCW),
)
DEFAULT_BUDGET = 120.0


@dataclass(frozen=True)
class Step:
    index: int
    choice: int = 0  # position in CHOICES

    @property
    def use_alpha(self):
        return CHOICES[self.choice][0]

    @property
    def direction(self):
        return CHOICES[self.choice][1]

    def key(self):
        return (self.index, self.choice)


@dataclass(frozen=True)
class BendSequence:
    steps: tuple

    @classmethod
    def of(cls, order, choices=None):
        choices = choices or [0] * len(order)
        return cls(tuple(Step(i, c) for i, c in zip(order, choices)))

    @property
    def order(self):
        return [s.index for s in self.steps]

    def keys(self):
        return tuple(s.key() for s in self.steps)

    def __len__(self):
        return len(self.steps)

    def is_valid(self, n):
        return sorted(self.order) == list(range(n))


# ---------------------------------------------------------------- tree


class _Node:
    __slots__ = ("children", "failed", "kind")

    def __init__(self):
        self.children = {}
        self.failed = False
        self.kind = None


class FailedPrefixTree:
    """Trie of sequence prefixes known to have no feasible completion."""

    def __init__(self, n, n_choices=len(CHOICES)):
        self.n = n
        self.n_choices = n_choices
        self.root = _Node()
        self.dead_sets = set()
        self.records = 0

    def _width(self, depth):
        return (self.n - depth) * self.n_choices

    def is_failed(self, prefix):
        """True if ``prefix`` or one of its own prefixes is stored as failed."""
        node = self.root
        if node.failed:
            return True
        for key in prefix:
            node = node.children.get(key)
            if node is None:
                return False
            if node.failed:
                return True
        return False

    def record(self, prefix, kind="sim", dead=False):
        """Mark ``prefix`` failed, drop its stored descendants, propagate upward.

        A failed last step only rules out that move, so the executed set is
        registered as dead only when ``dead`` is given or when every child of
        a node has failed in simulation.
        """
        prefix = tuple(prefix)
        path = [self.root]
        node = self.root
        for key in prefix:
            if node.failed:
                return
            node = node.children.setdefault(key, _Node())
            path.append(node)
        if node.failed:
            return
        node.failed = True
        node.kind = kind
        node.children.clear()
        self.records += 1
        if dead and kind == "sim":
            self.dead_sets.add(frozenset(k[0] for k in prefix))
        # a node whose every child has failed has failed too
        for depth in range(len(prefix) - 1, -1, -1):
            parent = path[depth]
            if parent.failed:
                break
            kids = parent.children
            if len(kids) < self._width(depth) or not all(c.failed for c in kids.values()):
                break
            parent.failed = True
            parent.kind = "sim" if all(c.kind == "sim" for c in kids.values()) else "motion"
            parent.children.clear()
            if parent.kind == "sim":
                self.dead_sets.add(frozenset(k[0] for k in prefix[:depth]))

    @property
    def exhausted(self):
        return self.root.failed

    def failed_prefixes(self):
        """All stored failed prefixes (for auditing)."""
        out = []

        def rec(node, prefix):
            if node.failed:
                out.append(prefix)
                return
            for key, child in node.children.items():
                rec(child, prefix + (key,))

        rec(self.root, ())
        return out


def record_failure(tree, seq, j, kind="sim"):
    """Store the failed prefix ``seq[:j+1]``."""
    if not 0 <= j < len(seq):
        raise ValueError("failure step outside the sequence")
    tree.record(seq.keys()[: j + 1], kind)
    return tree


def next_sequence_dfs(tree, n, use_dead_sets=True):
    """Lexicographically smallest full sequence that avoids every failed prefix.

    Returns None once the tree covers the whole choice space. Prefixes that
    reach a dead executed-set are recorded on the way.
    """
    if tree.root.failed:
        return None

    def rec(node, prefix, used):
        if len(prefix) == n:
            return prefix
        for idx in range(n):
            if idx in used:
                continue
            for c in range(tree.n_choices):
                key = (idx, c)
                child = node.children.get(key) if node is not None else None
                if child is not None and child.failed:
                    continue
                nxt = prefix + (key,)
                if use_dead_sets and len(nxt) < n and frozenset(used | {idx}) in tree.dead_sets:
                    tree.record(nxt, "sim", dead=True)
                    if tree.root.failed:
                        return None
                    continue
                found = rec(child, nxt, used | {idx})
                if found is not None:
                    return found
                if tree.root.failed:
                    return None
        return None

    keys = rec(tree.root, (), frozenset())
    if keys is None:
        return None
    return BendSequence(tuple(Step(i, c) for i, c in keys))


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class StepResult:
    ok: bool
    reason: str = None
    posed: object = None  # wire placed in the machine, before bending
    bent: object = None  # wire after bending, same placement
    achieved: float = 0.0


@dataclass
class Evaluation:
    ok: bool
    fail_step: int = None
    reason: str = None
    steps: list = field(default_factory=list)


class BendingProblem:
    """A bend set together with the machine, environment and a step cache."""

    def __init__(self, bends, machine, env, clearance=sim.DEFAULT_CLEARANCE):
        self.bends = bends
        self.machine = machine
        self.env = env
        self.clearance = clearance
        self.targets = layout(bends)
        self.n = len(self.targets)
        self.start = sim.initial_wire(bends)
        self._states = {frozenset(): self.start}
        self._cache = {}
        self.simulations = 0

    def state_for(self, executed):
        """Unposed intrinsic wire with the bends in ``executed`` applied."""
        executed = frozenset(executed)
        w = self._states.get(executed)
        if w is None:
            w = self.start
            for i in sorted(executed):
                a = self.targets[i]
                w = w.with_arc(a.start, a.turn, a.psi, a.index)
            self._states[executed] = w
        return w

    def static_infeasible(self):
        """Bends that no ordering can perform: outside the machine's work range."""
        bad = []
        for t in self.targets:
            try:
                need = self.machine.required_punch_angle(t.turn, self.bends.wire.diameter)
            except DiameterTooLarge:
                return list(range(self.n))
            if need > self.machine.punch_limit + 1e-12:
                bad.append(t.index)
        return bad

    def step(self, executed, step):
        """Outcome of performing ``step`` on a wire carrying ``executed`` bends."""
        key = (frozenset(executed), step.index, step.choice)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.simulations += 1
        res = run_step(self.state_for(executed), self.targets[step.index], step, self.machine, self.env,
                       self.clearance)
        self._cache[key] = res
        return res


def run_step(wire, target, step, machine, env, clearance=sim.DEFAULT_CLEARANCE):
    """Pose, check and bend once. Pure function of its inputs."""
    try:
        posed = sim.pose_wire_for_bend(wire, target, machine, step.use_alpha, step.direction)
    except UnreachablePose:
        return StepResult(False, "UnreachablePose")
    if sim.wire_collides(posed, env, clearance):
        return StepResult(False, "CollisionBeforeBend", posed)
    try:
        verdict = sim.check_contact_feasibility(posed, machine)
    except DiameterTooLarge:
        return StepResult(False, "DiameterTooLarge", posed)
    if not verdict:
        return StepResult(False, verdict.reason, posed)
    try:
        out = sim.simulate_bend(posed, target, step.direction, machine, env, step.use_alpha, clearance)
    except TargetExceedsWorkRange:
        return StepResult(False, "TargetExceedsWorkRange", posed)
    if out.contact:
        return StepResult(False, "CollisionDuringBend", posed, out.state, out.achieved)
    return StepResult(True, None, posed, out.state, out.achieved)


def evaluate_sequence(seq, problem):
    """Simulate ``seq`` step by step; stop at the first failing step."""
    if not seq.is_valid(problem.n):
        raise ValueError("sequence is not a permutation of the bend indices")
    done = set()
    ev = Evaluation(True)
    for j, st in enumerate(seq.steps):
        res = problem.step(done, st)
        ev.steps.append(res)
        if not res.ok:
            ev.ok, ev.fail_step, ev.reason = False, j, res.reason
            return ev
        done.add(st.index)
    return ev


# ---------------------------------------------------------------- search


@dataclass
class SearchStats:
    nodes_explored: int = 0  # step simulations actually run
    sequences_evaluated: int = 0
    prunes: int = 0
    motion_calls: int = 0
    wall_time: float = 0.0


@dataclass
class PlanResult:
    status: str  # "success", "infeasible" or "timeout"
    sequence: BendSequence = None
    steps: list = None
    motion: object = None
    stats: SearchStats = field(default_factory=SearchStats)
    reason: str = None
    trace: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == "success"


def prune_search(problem, motion_oracle=None, budget=DEFAULT_BUDGET, use_dead_sets=True, clock=time.perf_counter):
    """Find a feasible bending sequence.

    ``motion_oracle(seq, steps)`` returns an object with ``ok``,
    ``fail_step`` and ``reason``; a failure is stored at ``fail_step``.
    """
    if problem.n < 1:
        raise ValueError("nothing to bend")
    if not budget > 0:
        raise ValueError("budget must be positive")
    t0 = clock()
    stats = SearchStats()
    trace = []
    sims0 = problem.simulations

    def finish(result):
        stats.nodes_explored = problem.simulations - sims0
        stats.wall_time = clock() - t0
        result.stats = stats
        result.trace = trace
        return result

    bad = problem.static_infeasible()
    if bad:
        trace.append({"order": [], "choices": [], "fail_step": None,
                      "reason": f"TargetExceedsWorkRange: bends {bad}", "time": 0.0})
        return finish(PlanResult("infeasible", reason=f"bends {bad} exceed the machine work range"))

    tree = FailedPrefixTree(problem.n)
    while True:
        if clock() - t0 > budget:
            return finish(PlanResult("timeout", reason="search budget exceeded"))
        seq = next_sequence_dfs(tree, problem.n, use_dead_sets)
        if seq is None:
            stats.prunes = tree.records
            return finish(PlanResult("infeasible", reason="every sequence has a failed prefix"))
        stats.sequences_evaluated += 1
        ev = evaluate_sequence(seq, problem)
        rec = {"order": seq.order, "choices": [s.choice for s in seq.steps], "fail_step": ev.fail_step,
               "reason": ev.reason, "time": round(clock() - t0, 6)}
        if not ev.ok:
            record_failure(tree, seq, ev.fail_step, "sim")
            stats.prunes = tree.records
            trace.append(rec)
            continue
        if motion_oracle is None:
            trace.append(rec)
            return finish(PlanResult("success", seq, ev.steps))
        stats.motion_calls += 1
        mv = motion_oracle(seq, ev.steps)
        if mv.ok:
            trace.append(rec)
            return finish(PlanResult("success", seq, ev.steps, motion=mv))
        rec["fail_step"], rec["reason"] = mv.fail_step, f"motion: {mv.reason}"
        trace.append(rec)
        record_failure(tree, seq, mv.fail_step, "motion")
        stats.prunes = tree.records


# ---------------------------------------------------------------- oracles


def exhaustive_search(problem, motion_oracle=None):
    """Reference search without a failure tree or set memo.

    Enumerates every (order, choices) sequence lexicographically, evaluating
    each from scratch up to its first failure, and stops at the first
    success. Step simulations are shared through a cache keyed by the set of
    already executed bends, which fully determines the wire state.

    Returns ``(feasible, sequence, steps_evaluated)``; ``steps_evaluated``
    counts simulated steps as a cache-free enumeration would.
    """
    n = problem.n
    cache = {}
    counted = [0]

    def step_at(prefix_keys, state, key):
        ck = (frozenset(k[0] for k in prefix_keys), key)
        if ck not in cache:
            st = Step(*key)
            cache[ck] = run_step(state, problem.targets[st.index], st, problem.machine, problem.env,
                                 problem.clearance)
        return cache[ck]

    def completions(depth):
        return math.factorial(n - depth) * len(CHOICES) ** (n - depth)

    def rec(prefix_keys, state, used):
        depth = len(prefix_keys)
        if depth == n:
            seq = BendSequence(tuple(Step(*k) for k in prefix_keys))
            if motion_oracle is None:
                return seq
            ev = evaluate_sequence(seq, problem)
            mv = motion_oracle(seq, ev.steps)
            if mv.ok:
                return seq
            counted[0] += n
            return None
        for idx in range(n):
            if idx in used:
                continue
            for c in range(len(CHOICES)):
                key = (idx, c)
                res = step_at(prefix_keys, state, key)
                if not res.ok:
                    # every completion of this prefix would be evaluated up to here
                    counted[0] += completions(depth + 1) * (depth + 1)
                    continue
                a = problem.targets[idx]
                nxt = state.with_arc(a.start, a.turn, a.psi, a.index)
                found = rec(prefix_keys + (key,), nxt, used | {idx})
                if found is not None:
                    return found
        return None

    found = rec((), problem.start, frozenset())
    if found is not None:
        counted[0] += n
    return found is not None, found, counted[0]
