"""Single-agent planning: minimum-cost path plus generator schedule under
battery, fuel, noise, and time-indexed avoidance constraints.

The solver is a best-first labeling search over an implicitly generated
(node, time) state graph.  Each label records accumulated cost, arrival
time, battery charge, and generator fuel; lists of mutually undominated
labels are kept per state, and states are expanded in order of
``cost + cost_to_go`` with an admissible heuristic from a reverse
shortest-path pass.

Two interchangeable kernels implement the inner loop: a compiled extension
(``hfmapf._engine``) and a pure-Python fallback (``hfmapf._engine_py``).
They are kept in lockstep; ``HFMAPF_ENGINE`` or ``SolveLimits.engine``
selects one explicitly.

A note on pruning: the public :func:`dominates` predicate orders labels at
the same node by (cost, time, battery, fuel).  Inside the solver, pruning is
restricted to labels at the same (node, time) state with *equal* battery.
Arriving earlier is not always better once time-indexed constraints exist
(there is no wait action to absorb a delay), and a higher battery level can
be strictly worse because recharging past ``battery_max`` is infeasible
rather than clamped.  The restricted rule never discards a label some
optimal completion needs, which is what the exhaustive-oracle equivalence
tests pin down.
"""
from __future__ import annotations

import heapq
import os
import time as _time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import AgentSpec, EdgeAttr, Graph, Instance

from . import _engine_py

try:
    from . import _engine  # compiled kernel, optional
except ImportError:  # pragma: no cover - depends on build environment
    _engine = None

_ENGINES = {"python": _engine_py}
if _engine is not None:
    _ENGINES["compiled"] = _engine


def available_engines() -> tuple[str, ...]:
    return tuple(sorted(_ENGINES))


def default_engine() -> str:
    """Engine used when none is requested: ``HFMAPF_ENGINE`` if set, else the
    compiled kernel when present, else the pure-Python fallback."""
    env = os.environ.get("HFMAPF_ENGINE")
    if env:
        if env not in _ENGINES:
            raise ValueError(
                f"HFMAPF_ENGINE={env!r} not available (have {available_engines()})"
            )
        return env
    return "compiled" if "compiled" in _ENGINES else "python"


def _resolve_engine(name: str | None):
    if name is None:
        name = default_engine()
    if name not in _ENGINES:
        raise ValueError(f"unknown engine {name!r} (have {available_engines()})")
    return name, _ENGINES[name]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Label:
    """A partial plan: the state reached and how it was reached."""

    node: int
    cost: float
    time: int
    battery: float
    fuel: float
    gen_on_last_edge: bool = False
    parent: "Label | None" = field(default=None, repr=False)
    order: int = 0  # creation sequence, used only to break exact ties


@dataclass(frozen=True)
class ConstraintSet:
    """Dynamic obstacles for one agent: (node, arrival time) and
    (directed edge, departure time) prohibitions."""

    vertex_constraints: frozenset[tuple[int, int]] = frozenset()
    edge_constraints: frozenset[tuple[tuple[int, int], int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self, "vertex_constraints", frozenset(self.vertex_constraints)
        )
        object.__setattr__(self, "edge_constraints", frozenset(self.edge_constraints))
        if any(t < 0 for _, t in self.vertex_constraints) or any(
            t < 0 for _, t in self.edge_constraints
        ):
            raise ValueError("constraint times must be non-negative")

    def with_vertices(self, pairs: Iterable[tuple[int, int]]) -> "ConstraintSet":
        return ConstraintSet(
            self.vertex_constraints | frozenset(pairs), self.edge_constraints
        )

    def with_edges(
        self, pairs: Iterable[tuple[tuple[int, int], int]]
    ) -> "ConstraintSet":
        return ConstraintSet(
            self.vertex_constraints, self.edge_constraints | frozenset(pairs)
        )

    def size(self) -> int:
        return len(self.vertex_constraints) + len(self.edge_constraints)


@dataclass(frozen=True)
class Heuristic:
    """Per-node lower bound on the remaining travel cost to one goal."""

    goal: int
    cost_to_go: np.ndarray  # float64, inf where the goal is unreachable


@dataclass(frozen=True)
class Plan:
    """A completed single-agent plan."""

    path: tuple[int, ...]
    gen_pattern: tuple[bool, ...]  # one flag per traversed edge
    arrival_times: tuple[int, ...]
    cost: float
    final_battery: float
    final_fuel: float

    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.path[:-1], self.path[1:]))


@dataclass(frozen=True)
class SearchStats:
    labels_created: int = 0
    labels_pruned: int = 0
    labels_expanded: int = 0
    peak_open: int = 0


@dataclass(frozen=True)
class SolveLimits:
    """Search limits; ``None`` fields fall back to defaults."""

    budget_s: float | None = None
    horizon: int | None = None
    engine: str | None = None


@dataclass(frozen=True)
class SearchResult:
    status: str  # "found" | "infeasible" | "timeout"
    plan: Plan | None
    stats: SearchStats
    engine: str
    f_trace: tuple[float, ...] | None = None


# ---------------------------------------------------------------------------
# operations


def compute_heuristic(graph: Graph, goal: int) -> Heuristic:
    """Exact one-to-all reverse shortest-path distances over travel_cost.

    Admissible (and consistent) for the full problem because every other
    ingredient of feasibility only removes options.
    """
    if not (0 <= goal < graph.node_count):
        raise ValueError(f"goal {goal} out of range")
    dist = np.full(graph.node_count, np.inf, dtype=np.float64)
    dist[goal] = 0.0
    heap = [(0.0, goal)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        for v, attr in graph.in_edges[u]:
            nd = du + attr.travel_cost
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    dist.setflags(write=False)
    return Heuristic(goal=goal, cost_to_go=dist)


def extend(
    label: Label,
    edge: tuple[int, int],
    attr: EdgeAttr,
    gen_on: bool,
    battery_max: float,
) -> Label | None:
    """One-edge extension of a label; ``None`` when infeasible.

    Infeasible cases: generator requested on a noise-restricted edge, battery
    leaving [0, battery_max] (overfilling is infeasible, not clamped), fuel
    going negative, or the head node already on the label's path.
    """
    i, j = edge
    if label.node != i:
        raise ValueError(f"label is at node {label.node}, not at edge tail {i}")
    if gen_on and not attr.gen_allowed:
        return None
    p: Label | None = label
    while p is not None:
        if p.node == j:
            return None
        p = p.parent
    if gen_on:
        battery = label.battery - attr.energy_cost + attr.recharge
        fuel = label.fuel - attr.recharge
    else:
        battery = label.battery - attr.energy_cost
        fuel = label.fuel
    if battery < 0.0 or battery > battery_max or fuel < 0.0:
        return None
    return Label(
        node=j,
        cost=label.cost + attr.travel_cost,
        time=label.time + attr.travel_time,
        battery=battery,
        fuel=fuel,
        gen_on_last_edge=gen_on,
        parent=label,
        order=label.order + 1,
    )


def dominates(a: Label, b: Label) -> bool:
    """True when ``a`` is at least as good as ``b`` in cost, time, battery and
    fuel with some strict advantage, or identical in all four and older."""
    if a.node != b.node:
        raise ValueError("dominance is only defined between labels at one node")
    if a.cost > b.cost or a.time > b.time or a.battery < b.battery or a.fuel < b.fuel:
        return False
    if a.cost < b.cost or a.time < b.time or a.battery > b.battery or a.fuel > b.fuel:
        return True
    return a.order < b.order


def eff(
    candidate: Label,
    open_store: dict[int, list[Label]],
    closed_store: dict[int, list[Label]],
) -> bool:
    """Efficiency test against node-indexed label stores.

    Returns False when some stored label at ``candidate.node`` dominates the
    candidate; otherwise prunes open-store labels the candidate dominates and
    returns True.
    """
    node = candidate.node
    for lbl in closed_store.get(node, ()):
        if dominates(lbl, candidate):
            return False
    lst = open_store.get(node)
    if lst is not None:
        for lbl in lst:
            if dominates(lbl, candidate):
                return False
        kept = [lbl for lbl in lst if not dominates(candidate, lbl)]
        if len(kept) != len(lst):
            open_store[node] = kept
    return True


def violates(
    transition: tuple[int, int, int, int], constraints: ConstraintSet
) -> bool:
    """Whether moving i->j departing/arriving at the given times hits a
    constraint: vertex constraints bind at arrival, edge constraints at
    departure."""
    i, j, depart_time, arrive_time = transition
    return (j, arrive_time) in constraints.vertex_constraints or (
        (i, j),
        depart_time,
    ) in constraints.edge_constraints


def default_horizon(graph: Graph, start_time: int = 0) -> int:
    """Latest admitted arrival time: elementary paths cannot be longer."""
    return start_time + graph.node_count * graph.max_travel_time()


def _constraint_keys(
    constraints: ConstraintSet,
    edge_index: dict[tuple[int, int], int],
    kbase: int,
    horizon: int,
) -> tuple[np.ndarray, np.ndarray]:
    vk = sorted(
        n * kbase + t
        for n, t in constraints.vertex_constraints
        if 0 <= t <= horizon
    )
    ek = sorted(
        edge_index[e] * kbase + t
        for e, t in constraints.edge_constraints
        if e in edge_index and 0 <= t <= horizon
    )
    return (
        np.asarray(vk, dtype=np.int64),
        np.asarray(ek, dtype=np.int64),
    )


def solve_nrhfsp(
    instance: Instance,
    agent_index: int,
    constraints: ConstraintSet | None = None,
    limits: SolveLimits | None = None,
    *,
    heuristic: Heuristic | None = None,
    relax_resources: bool = False,
    want_trace: bool = False,
) -> SearchResult:
    """Minimum-cost feasible plan for one agent under its constraint set.

    Optimal within the time horizon; ``relax_resources`` drops the battery,
    fuel, and noise rules (the classical shortest-path relaxation used for
    subproblem timing comparisons) while keeping constraints and the
    elementary-path rule.
    """
    agent = instance.agents[agent_index]
    if agent.start == agent.goal:
        raise ValueError("agent start equals goal; instance is invalid")
    graph = instance.graph
    constraints = constraints or ConstraintSet()
    limits = limits or SolveLimits()
    horizon = (
        limits.horizon
        if limits.horizon is not None
        else default_horizon(graph, agent.start_time)
    )
    if heuristic is None:
        heuristic = compute_heuristic(graph, agent.goal)
    elif heuristic.goal != agent.goal:
        raise ValueError("heuristic was computed for a different goal")
    indptr, nbr, eid, d, t, c, z, g, edge_index = graph.csr()
    kbase = horizon + 2
    vkeys, ekeys = _constraint_keys(constraints, edge_index, kbase, horizon)
    engine_name, engine_mod = _resolve_engine(limits.engine)
    if limits.budget_s is not None and limits.budget_s <= 0.0:
        return SearchResult("timeout", None, SearchStats(), engine_name, None)
    deadline = (
        _time.monotonic() + limits.budget_s if limits.budget_s is not None else None
    )
    status, path, times, gens, cost, fb, fq, stats_d, trace = engine_mod.search(
        indptr,
        nbr,
        d,
        t,
        c,
        z,
        g,
        agent.start,
        agent.goal,
        agent.battery_init,
        agent.battery_max,
        agent.fuel_init,
        agent.start_time,
        heuristic.cost_to_go,
        horizon,
        vkeys,
        ekeys,
        relax_resources,
        deadline,
        want_trace,
    )
    stats = SearchStats(**stats_d)
    trace_t = tuple(trace) if trace is not None else None
    if status == _engine_py.STATUS_FOUND:
        plan = Plan(
            path=tuple(int(v) for v in path),
            gen_pattern=tuple(bool(v) for v in gens),
            arrival_times=tuple(int(v) for v in times),
            cost=float(cost),
            final_battery=float(fb),
            final_fuel=float(fq),
        )
        return SearchResult("found", plan, stats, engine_name, trace_t)
    if status == _engine_py.STATUS_TIMEOUT:
        return SearchResult("timeout", None, stats, engine_name, trace_t)
    return SearchResult("infeasible", None, stats, engine_name, trace_t)


# ---------------------------------------------------------------------------
# plan replay


def resource_trajectory(
    graph: Graph, agent: AgentSpec, path: Iterable[int], gen_pattern: Iterable[bool]
) -> tuple[list[int], list[float], list[float]]:
    """Arrival-time / battery / fuel sequences along a path, validating every
    model rule on the way.  Raises ValueError on the first violation."""
    path = list(path)
    gens = list(gen_pattern)
    if len(path) < 2:
        raise ValueError("a plan must traverse at least one edge")
    if len(gens) != len(path) - 1:
        raise ValueError("gen_pattern length must be len(path) - 1")
    if len(set(path)) != len(path):
        raise ValueError("path revisits a node")
    times = [agent.start_time]
    batts = [agent.battery_init]
    fuels = [agent.fuel_init]
    for k in range(len(path) - 1):
        edge = (path[k], path[k + 1])
        attr = graph.edges.get(edge)
        if attr is None:
            raise ValueError(f"edge {edge} does not exist")
        if gens[k]:
            if not attr.gen_allowed:
                raise ValueError(f"generator on along noise-restricted edge {edge}")
            b = batts[-1] - attr.energy_cost + attr.recharge
            q = fuels[-1] - attr.recharge
        else:
            b = batts[-1] - attr.energy_cost
            q = fuels[-1]
        if b < 0.0:
            raise ValueError(f"battery below zero after edge {edge}")
        if b > agent.battery_max:
            raise ValueError(f"battery above battery_max after edge {edge}")
        if q < 0.0:
            raise ValueError(f"fuel below zero after edge {edge}")
        times.append(times[-1] + attr.travel_time)
        batts.append(b)
        fuels.append(q)
    return times, batts, fuels


def replay_plan(
    graph: Graph, agent: AgentSpec, path: Iterable[int], gen_pattern: Iterable[bool]
) -> Plan:
    """Rebuild a Plan from its path and generator pattern via the resource
    recurrence (used for verification and for loading solution files)."""
    path = tuple(path)
    gens = tuple(gen_pattern)
    if path[0] != agent.start or path[-1] != agent.goal:
        raise ValueError("path endpoints do not match the agent spec")
    times, batts, fuels = resource_trajectory(graph, agent, path, gens)
    cost = 0.0
    for k in range(len(path) - 1):
        cost += graph.edges[(path[k], path[k + 1])].travel_cost
    return Plan(
        path=path,
        gen_pattern=gens,
        arrival_times=tuple(times),
        cost=cost,
        final_battery=batts[-1],
        final_fuel=fuels[-1],
    )
