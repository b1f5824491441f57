"""Exhaustive ground-truth solvers for desk-scale instances.

``brute_force_single`` enumerates every elementary timed path and generator
pattern; ``brute_force_joint`` enumerates the cross product of per-agent
feasible plans and filters by conflict detection.  Deliberately simple and
slow: these are the reference the search algorithms are measured against.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .labeling import ConstraintSet, Plan
from .model import Instance


class OracleLimitError(RuntimeError):
    """The instance exceeds what exhaustive enumeration will attempt."""


@dataclass(frozen=True)
class OracleLimits:
    max_nodes: int = 16
    horizon: int = 12
    max_agents: int = 3

    def check(self) -> None:
        if self.max_nodes < 1 or self.horizon < 1 or self.max_agents < 1:
            raise ValueError("oracle limits must be positive")


def _min_feasible_pattern(graph, agent, path) -> tuple[bool, ...] | None:
    """Lexicographically smallest feasible generator pattern for a fixed path
    (False < True), or None when no pattern satisfies the resource rules."""
    m = len(path) - 1
    attrs = [graph.edges[(path[k], path[k + 1])] for k in range(m)]
    pat: list[bool] = []

    def rec(k: int, b: float, q: float) -> bool:
        if k == m:
            return True
        a = attrs[k]
        nb = b - a.energy_cost
        if nb >= 0.0:
            pat.append(False)
            if rec(k + 1, nb, q):
                return True
            pat.pop()
        if a.gen_allowed:
            nb = b - a.energy_cost + a.recharge
            nq = q - a.recharge
            if 0.0 <= nb <= agent.battery_max and nq >= 0.0:
                pat.append(True)
                if rec(k + 1, nb, nq):
                    return True
                pat.pop()
        return False

    if rec(0, agent.battery_init, agent.fuel_init):
        return tuple(pat)
    return None


def _pattern_plan(graph, agent, path, pattern) -> Plan:
    times = [agent.start_time]
    b = agent.battery_init
    q = agent.fuel_init
    cost = 0.0
    for k in range(len(path) - 1):
        a = graph.edges[(path[k], path[k + 1])]
        cost += a.travel_cost
        times.append(times[-1] + a.travel_time)
        if pattern[k]:
            b = b - a.energy_cost + a.recharge
            q = q - a.recharge
        else:
            b = b - a.energy_cost
    return Plan(
        path=tuple(path),
        gen_pattern=tuple(pattern),
        arrival_times=tuple(times),
        cost=cost,
        final_battery=b,
        final_fuel=q,
    )


def _enumerate_paths(instance, agent_index, constraints, limits):
    """Yield (path, cost) for every elementary constraint-respecting timed
    path from start to goal within the horizon, in lexicographic path order."""
    graph = instance.graph
    agent = instance.agents[agent_index]
    cs = constraints or ConstraintSet()
    if (agent.start, agent.start_time) in cs.vertex_constraints:
        return
    path = [agent.start]
    visited = {agent.start}
    out: list[tuple[tuple[int, ...], float]] = []

    def rec(node: int, t: int, cost: float):
        if node == agent.goal:
            out.append((tuple(path), cost))
            return
        for j, attr in graph.out_edges[node]:
            if j in visited:
                continue
            tj = t + attr.travel_time
            if tj > limits.horizon:
                continue
            if (j, tj) in cs.vertex_constraints:
                continue
            if ((node, j), t) in cs.edge_constraints:
                continue
            path.append(j)
            visited.add(j)
            rec(j, tj, cost + attr.travel_cost)
            path.pop()
            visited.remove(j)

    rec(agent.start, agent.start_time, 0.0)
    yield from out


def brute_force_single(
    instance: Instance,
    agent_index: int,
    constraints: ConstraintSet | None = None,
    limits: OracleLimits | None = None,
) -> Plan | None:
    """Exhaustively optimal plan for one agent, or None when infeasible.

    Ties break to the lexicographically smallest path, then pattern.
    """
    limits = limits or OracleLimits()
    limits.check()
    if instance.graph.node_count > limits.max_nodes:
        raise OracleLimitError(
            f"{instance.graph.node_count} nodes exceeds oracle limit "
            f"{limits.max_nodes}"
        )
    graph = instance.graph
    agent = instance.agents[agent_index]
    best: tuple[float, tuple[int, ...], tuple[bool, ...]] | None = None
    for path, cost in _enumerate_paths(instance, agent_index, constraints, limits):
        if best is not None and cost > best[0]:
            continue
        pattern = _min_feasible_pattern(graph, agent, path)
        if pattern is None:
            continue
        cand = (cost, path, pattern)
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    return _pattern_plan(graph, agent, best[1], best[2])


def _all_feasible_plans(instance, agent_index, limits) -> list[Plan]:
    """Every feasible path (with one witness pattern each) for one agent under
    empty constraints.  Generator patterns change neither cost nor timing, so
    one feasible witness per path is enough for joint optimization."""
    graph = instance.graph
    agent = instance.agents[agent_index]
    plans = []
    for path, _cost in _enumerate_paths(instance, agent_index, None, limits):
        pattern = _min_feasible_pattern(graph, agent, path)
        if pattern is not None:
            plans.append(_pattern_plan(graph, agent, path, pattern))
    return plans


def brute_force_joint(instance: Instance, limits: OracleLimits | None = None):
    """Exhaustively optimal conflict-free joint solution.

    Returns ``(plans, total_cost)`` or None when no conflict-free combination
    of feasible plans exists within the horizon.
    """
    from .cbs import detect_conflicts  # shared conflict semantics by design

    limits = limits or OracleLimits()
    limits.check()
    if instance.graph.node_count > limits.max_nodes:
        raise OracleLimitError(
            f"{instance.graph.node_count} nodes exceeds oracle limit "
            f"{limits.max_nodes}"
        )
    if len(instance.agents) > limits.max_agents:
        raise OracleLimitError(
            f"{len(instance.agents)} agents exceeds oracle limit "
            f"{limits.max_agents}"
        )
    plan_sets = [
        _all_feasible_plans(instance, k, limits) for k in range(len(instance.agents))
    ]
    if any(not s for s in plan_sets):
        return None
    best = None
    best_total = None
    for combo in itertools.product(*plan_sets):
        total = 0.0
        for p in combo:
            total += p.cost
        if best_total is not None and total >= best_total:
            continue
        if detect_conflicts(combo, instance.epsilon):
            continue
        best = combo
        best_total = total
    if best is None:
        return None
    return tuple(best), best_total
