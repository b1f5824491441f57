"""Conflict-based search: best-first exploration of a constraint tree whose
nodes hold per-agent constraint sets and plans.

The root solves every agent independently; expansion picks the cheapest tree
node, finds the first conflict in time between its plans, and branches into
two children, each constraining one of the conflicting agents and re-solving
only that agent.  The first expanded conflict-free node is optimal.
"""
from __future__ import annotations

import heapq
import time as _time
from dataclasses import dataclass, field

from .labeling import (
    ConstraintSet,
    Heuristic,
    Plan,
    SolveLimits,
    compute_heuristic,
    replay_plan,
    solve_nrhfsp,
)
from .model import Instance

SOLUTION_HEADER = "hfmapf-solution v1"


@dataclass(frozen=True)
class Conflict:
    """One pairwise conflict.  ``agents`` is ordered; for an edge conflict,
    ``location`` is the directed edge as traversed by ``agents[0]`` (the
    other agent traverses its reverse)."""

    kind: str  # "vertex" | "edge"
    agents: tuple[int, int]
    location: int | tuple[int, int]
    time: int


@dataclass
class CTNode:
    constraints: tuple[ConstraintSet, ...]
    plans: tuple[Plan, ...]
    total_cost: float
    parent: "CTNode | None" = field(default=None, repr=False)
    replanned_agent: int | None = None
    node_id: int = 0
    n_conflicts: int = 0
    first: Conflict | None = None
    timed_out: bool = False


@dataclass(frozen=True)
class CbsStats:
    ct_nodes_expanded: int = 0
    ct_nodes_generated: int = 0
    subproblem_calls: int = 0
    subproblem_time: float = 0.0
    wall_time: float = 0.0
    spp_subproblem_calls: int = 0
    spp_subproblem_time: float = 0.0
    subproblem_times: tuple[float, ...] | None = None
    spp_subproblem_times: tuple[float, ...] | None = None
    expansion_log: tuple[tuple[int, int, float], ...] | None = None


@dataclass(frozen=True)
class Solution:
    plans: tuple[Plan, ...]
    total_cost: float
    stats: CbsStats


@dataclass(frozen=True)
class CbsResult:
    status: str  # "solved" | "infeasible" | "timeout"
    solution: Solution | None
    stats: CbsStats


def detect_conflicts(plans, epsilon: int) -> list[Conflict]:
    """All pairwise conflicts between plans, earliest first.

    An agent occupies a node only at its arrival time and vanishes after
    reaching its goal.  A vertex conflict is two agents at one node at times
    closer than epsilon; an edge conflict is two agents on opposing directed
    edges whose arrival times at the swapped endpoints are closer than
    epsilon.  Ordering: time, then vertex before edge, then agent pair, then
    location.
    """
    conflicts: list[Conflict] = []
    presence = [dict(zip(p.path, p.arrival_times)) for p in plans]
    traversals = []
    for p in plans:
        tr = {}
        for k in range(len(p.path) - 1):
            tr[(p.path[k], p.path[k + 1])] = (
                p.arrival_times[k],
                p.arrival_times[k + 1],
            )
        traversals.append(tr)
    for a in range(len(plans)):
        for b in range(a + 1, len(plans)):
            pa, pb = presence[a], presence[b]
            small, big = (pa, pb) if len(pa) <= len(pb) else (pb, pa)
            for node, t1 in small.items():
                t2 = big.get(node)
                if t2 is not None and abs(t1 - t2) < epsilon:
                    conflicts.append(
                        Conflict("vertex", (a, b), node, min(t1, t2))
                    )
            for edge, (_, arr_a) in traversals[a].items():
                rev = traversals[b].get((edge[1], edge[0]))
                if rev is not None and abs(arr_a - rev[1]) < epsilon:
                    conflicts.append(
                        Conflict("edge", (a, b), edge, min(arr_a, rev[1]))
                    )
    def key(c: Conflict):
        loc = (c.location,) if c.kind == "vertex" else c.location
        return (c.time, 0 if c.kind == "vertex" else 1, c.agents, loc)

    conflicts.sort(key=key)
    return conflicts


def first_conflict(plans, epsilon: int) -> Conflict | None:
    found = detect_conflicts(plans, epsilon)
    return found[0] if found else None


def _constraints_for(
    conflict: Conflict, agent: int, instance: Instance
) -> tuple[str, list]:
    """The additional prohibition one child imposes on ``agent``: the conflict
    location at every integer time in the open window (t - eps, t + eps)."""
    eps = instance.epsilon
    window = range(conflict.time - eps + 1, conflict.time + eps)
    if conflict.kind == "vertex":
        return ("vertex", [(conflict.location, t) for t in window if t >= 0])
    edge = (
        conflict.location
        if agent == conflict.agents[0]
        else (conflict.location[1], conflict.location[0])
    )
    travel_time = instance.graph.edges[edge].travel_time
    departs = [t - travel_time for t in window]
    return ("edge", [(edge, t) for t in departs if t >= 0])


class _Budget:
    def __init__(self, budget_s: float | None):
        self.deadline = (
            _time.monotonic() + budget_s if budget_s is not None else None
        )

    def remaining(self) -> float | None:
        if self.deadline is None:
            return None
        return self.deadline - _time.monotonic()

    def exhausted(self) -> bool:
        r = self.remaining()
        return r is not None and r <= 0.0


class _SubSolver:
    """Wraps the low-level solver with heuristic caching, timing, and the
    optional paired resource-relaxed re-solve used for benchmark reports."""

    def __init__(self, instance, limits, budget, compare_spp, collect_times):
        self.instance = instance
        self.limits = limits or SolveLimits()
        self.budget = budget
        self.compare_spp = compare_spp
        self.calls = 0
        self.time = 0.0
        self.spp_calls = 0
        self.spp_time = 0.0
        self.times: list[float] = [] if collect_times else None
        self.spp_times: list[float] = [] if collect_times else None
        self._heuristics: dict[int, Heuristic] = {}

    def heuristic(self, goal: int) -> Heuristic:
        h = self._heuristics.get(goal)
        if h is None:
            h = compute_heuristic(self.instance.graph, goal)
            self._heuristics[goal] = h
        return h

    def solve(self, agent_index: int, constraints: ConstraintSet):
        agent = self.instance.agents[agent_index]
        sub_limits = SolveLimits(
            budget_s=self.budget.remaining(),
            horizon=self.limits.horizon,
            engine=self.limits.engine,
        )
        t0 = _time.perf_counter()
        result = solve_nrhfsp(
            self.instance,
            agent_index,
            constraints,
            sub_limits,
            heuristic=self.heuristic(agent.goal),
        )
        dt = _time.perf_counter() - t0
        self.calls += 1
        self.time += dt
        if self.times is not None:
            self.times.append(dt)
        if self.compare_spp:
            t0 = _time.perf_counter()
            solve_nrhfsp(
                self.instance,
                agent_index,
                constraints,
                sub_limits,
                heuristic=self.heuristic(agent.goal),
                relax_resources=True,
            )
            dt = _time.perf_counter() - t0
            self.spp_calls += 1
            self.spp_time += dt
            if self.spp_times is not None:
                self.spp_times.append(dt)
        return result


def branch(
    node: CTNode,
    conflict: Conflict,
    instance: Instance,
    limits: SolveLimits | None = None,
    *,
    _sub: _SubSolver | None = None,
    _next_id: int = 0,
) -> list[CTNode]:
    """Children of a tree node: one per conflicting agent, each with that
    agent's constraint set enlarged over the conflict window and its plan
    re-solved.  Children whose subproblem is infeasible are dropped; a
    subproblem timeout is propagated via ``CTNode.timed_out``."""
    if _sub is None:
        _sub = _SubSolver(instance, limits, _Budget(
            limits.budget_s if limits else None), False, False)
    children: list[CTNode] = []
    for agent in conflict.agents:
        kind, additions = _constraints_for(conflict, agent, instance)
        base = node.constraints[agent]
        new_cs = (
            base.with_vertices(additions)
            if kind == "vertex"
            else base.with_edges(additions)
        )
        constraints = tuple(
            new_cs if k == agent else cs for k, cs in enumerate(node.constraints)
        )
        result = _sub.solve(agent, new_cs)
        if result.status == "timeout":
            children.append(
                CTNode(
                    constraints=constraints,
                    plans=node.plans,
                    total_cost=node.total_cost,
                    parent=node,
                    replanned_agent=agent,
                    node_id=_next_id + len(children),
                    timed_out=True,
                )
            )
            continue
        if result.status == "infeasible":
            continue
        plans = tuple(
            result.plan if k == agent else p for k, p in enumerate(node.plans)
        )
        total = 0.0
        for p in plans:
            total += p.cost
        found = detect_conflicts(plans, instance.epsilon)
        children.append(
            CTNode(
                constraints=constraints,
                plans=plans,
                total_cost=total,
                parent=node,
                replanned_agent=agent,
                node_id=_next_id + len(children),
                n_conflicts=len(found),
                first=found[0] if found else None,
            )
        )
    return children


def solve(
    instance: Instance,
    limits: SolveLimits | None = None,
    *,
    compare_spp: bool = False,
    collect_call_times: bool = False,
    keep_expansion_log: bool = False,
) -> CbsResult:
    """Optimal conflict-free solution, or infeasible/timeout.

    Node selection: lowest total cost, then fewer conflicts, then older node.
    The default budget is 120 seconds.
    """
    limits = limits or SolveLimits()
    budget_s = limits.budget_s if limits.budget_s is not None else 120.0
    budget = _Budget(budget_s)
    t_start = _time.perf_counter()
    sub = _SubSolver(
        instance, limits, budget, compare_spp, collect_call_times
    )
    log: list[tuple[int, int, float]] | None = [] if keep_expansion_log else None
    expanded = 0
    generated = 0

    def stats() -> CbsStats:
        return CbsStats(
            ct_nodes_expanded=expanded,
            ct_nodes_generated=generated,
            subproblem_calls=sub.calls,
            subproblem_time=sub.time,
            wall_time=_time.perf_counter() - t_start,
            spp_subproblem_calls=sub.spp_calls,
            spp_subproblem_time=sub.spp_time,
            subproblem_times=tuple(sub.times) if sub.times is not None else None,
            spp_subproblem_times=(
                tuple(sub.spp_times) if sub.spp_times is not None else None
            ),
            expansion_log=tuple(log) if log is not None else None,
        )

    empty_cs = ConstraintSet()
    root_plans: list[Plan] = []
    for k in range(len(instance.agents)):
        result = sub.solve(k, empty_cs)
        if result.status == "timeout":
            return CbsResult("timeout", None, stats())
        if result.status == "infeasible":
            return CbsResult("infeasible", None, stats())
        root_plans.append(result.plan)
    total = 0.0
    for p in root_plans:
        total += p.cost
    found = detect_conflicts(root_plans, instance.epsilon)
    root = CTNode(
        constraints=tuple(empty_cs for _ in instance.agents),
        plans=tuple(root_plans),
        total_cost=total,
        node_id=0,
        n_conflicts=len(found),
        first=found[0] if found else None,
    )
    generated = 1
    heap: list[tuple[float, int, int, CTNode]] = []
    heapq.heappush(heap, (root.total_cost, root.n_conflicts, root.node_id, root))

    while heap:
        if budget.exhausted():
            return CbsResult("timeout", None, stats())
        _, _, _, node = heapq.heappop(heap)
        expanded += 1
        if log is not None:
            log.append(
                (
                    node.node_id,
                    node.parent.node_id if node.parent is not None else -1,
                    node.total_cost,
                )
            )
        if node.n_conflicts == 0:
            s = stats()
            return CbsResult(
                "solved", Solution(node.plans, node.total_cost, s), s
            )
        children = branch(
            node, node.first, instance, limits, _sub=sub, _next_id=generated
        )
        if any(c.timed_out for c in children):
            return CbsResult("timeout", None, stats())
        for child in children:
            generated += 1
            heapq.heappush(
                heap, (child.total_cost, child.n_conflicts, child.node_id, child)
            )
    return CbsResult("infeasible", None, stats())


# ---------------------------------------------------------------------------
# solution file


def solution_to_text(solution: Solution) -> str:
    lines = [
        SOLUTION_HEADER,
        f"total_cost = {solution.total_cost!r}",
        f"agents = {len(solution.plans)}",
    ]
    for k, p in enumerate(solution.plans):
        lines.append(f"[agent {k}]")
        for idx, (node, t) in enumerate(zip(p.path, p.arrival_times)):
            gen = "-" if idx == 0 else ("1" if p.gen_pattern[idx - 1] else "0")
            lines.append(f"{node} {t} {gen}")
    lines.append("[stats]")
    lines.append(f"ct_nodes_expanded = {solution.stats.ct_nodes_expanded}")
    lines.append(f"subproblem_calls = {solution.stats.subproblem_calls}")
    lines.append(f"wall_time_s = {solution.stats.wall_time!r}")
    return "\n".join(lines) + "\n"


def solution_from_text(text: str, instance: Instance) -> Solution:
    """Rebuild a solution from its file against the owning instance.  Plans
    are replayed through the resource recurrence, so a tampered file that
    breaks any model rule is rejected."""
    lines = [
        ln.split("#", 1)[0].strip()
        for ln in text.splitlines()
    ]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != SOLUTION_HEADER:
        raise ValueError(f"expected header {SOLUTION_HEADER!r}")
    agent_rows: dict[int, list[tuple[int, int, str]]] = {}
    current: list[tuple[int, int, str]] | None = None
    n_agents = None
    for ln in lines[1:]:
        if ln.startswith("[agent "):
            idx = int(ln[len("[agent "):-1])
            current = agent_rows.setdefault(idx, [])
        elif ln == "[stats]":
            current = None
        elif "=" in ln:
            key, _, value = (t.strip() for t in ln.partition("="))
            if key == "agents":
                n_agents = int(value)
        elif current is not None:
            node_s, time_s, gen_s = ln.split()
            current.append((int(node_s), int(time_s), gen_s))
    if n_agents is None or sorted(agent_rows) != list(range(n_agents)):
        raise ValueError("malformed or incomplete agent sections")
    if n_agents != len(instance.agents):
        raise ValueError("agent count does not match the instance")
    plans = []
    for k in range(n_agents):
        rows = agent_rows[k]
        path = [r[0] for r in rows]
        gens = [r[2] == "1" for r in rows[1:]]
        plan = replay_plan(instance.graph, instance.agents[k], path, gens)
        if list(plan.arrival_times) != [r[1] for r in rows]:
            raise ValueError(f"agent {k}: stored times disagree with replay")
        plans.append(plan)
    total = 0.0
    for p in plans:
        total += p.cost
    return Solution(plans=tuple(plans), total_cost=total, stats=CbsStats())
