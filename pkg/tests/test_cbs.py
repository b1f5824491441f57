import pytest

from hfmapf import AgentSpec, GridSpec, Instance, generate_instance
from hfmapf.cbs import (
    CbsStats,
    Conflict,
    Solution,
    branch,
    detect_conflicts,
    first_conflict,
    solution_from_text,
    solution_to_text,
    solve,
)
from hfmapf.labeling import Plan, SolveLimits
from hfmapf.oracle import brute_force_joint, brute_force_single

from conftest import bidirected, free_attr, line_instance


def fake_plan(path, times=None, gens=None, cost=None):
    path = tuple(path)
    times = tuple(times) if times is not None else tuple(range(len(path)))
    gens = tuple(gens) if gens is not None else (False,) * (len(path) - 1)
    return Plan(
        path=path,
        gen_pattern=gens,
        arrival_times=times,
        cost=float(cost if cost is not None else len(path) - 1),
        final_battery=0.0,
        final_fuel=0.0,
    )


# ---------------------------------------------------------------------------
# conflict detection


def test_vertex_conflict_at_shared_node():
    a = fake_plan([1, 7, 3])
    b = fake_plan([5, 7, 9])
    found = detect_conflicts([a, b], epsilon=1)
    assert found == [Conflict("vertex", (0, 1), 7, 1)]


def test_vertex_conflict_window_scales_with_epsilon():
    a = fake_plan([1, 7, 3])
    b = fake_plan([5, 6, 7], times=[0, 1, 2])
    assert detect_conflicts([a, b], epsilon=1) == []
    assert detect_conflicts([a, b], epsilon=2) == [
        Conflict("vertex", (0, 1), 7, 1)
    ]


def test_edge_swap_conflict():
    a = fake_plan([3, 4], times=[5, 6])
    b = fake_plan([4, 3], times=[5, 6])
    found = detect_conflicts([a, b], epsilon=1)
    assert found == [Conflict("edge", (0, 1), (3, 4), 6)]


def test_disjoint_paths_no_conflict():
    a = fake_plan([0, 1, 2])
    b = fake_plan([5, 6, 7])
    assert detect_conflicts([a, b], epsilon=3) == []


def test_vanish_at_target():
    # agent 0 is done at node 2 by t=2; agent 1 passes node 2 at t=5
    a = fake_plan([0, 1, 2])
    b = fake_plan([9, 8, 2], times=[3, 4, 5])
    assert detect_conflicts([a, b], epsilon=2) == []
    c = fake_plan([9, 8, 2], times=[1, 2, 3])
    assert detect_conflicts([a, c], epsilon=2) == [
        Conflict("vertex", (0, 1), 2, 2)
    ]


def test_conflict_ordering_time_then_kind():
    a = fake_plan([0, 1, 2, 3])
    b = fake_plan([9, 8, 2, 5], times=[0, 1, 2, 3])  # vertex at node 2, t=2
    c = fake_plan([7, 6, 5], times=[0, 4, 5])
    found = detect_conflicts([a, b, c], epsilon=1)
    assert found[0] == Conflict("vertex", (0, 1), 2, 2)
    # same-time vertex and edge conflicts: vertex first
    d = fake_plan([1, 0], times=[0, 1])
    e = fake_plan([0, 1], times=[0, 1])
    f = fake_plan([9, 1], times=[0, 1])
    mixed = detect_conflicts([d, e, f], epsilon=1)
    kinds = [x.kind for x in mixed if x.time == 1]
    assert kinds == sorted(kinds, key=lambda k: 0 if k == "vertex" else 1)


def test_first_conflict_none_and_head():
    a = fake_plan([0, 1, 2])
    b = fake_plan([5, 6, 7])
    assert first_conflict([a, b], epsilon=1) is None
    c = fake_plan([9, 1, 7], times=[0, 1, 2])
    assert first_conflict([a, c], epsilon=1) == Conflict("vertex", (0, 1), 1, 1)


# ---------------------------------------------------------------------------
# branching


def corridor_instance() -> Instance:
    pairs = {
        (0, 1): free_attr(),
        (1, 2): free_attr(),
        (3, 4): free_attr(),
        (4, 5): free_attr(),
        (0, 3): free_attr(),
        (1, 4): free_attr(),
        (2, 5): free_attr(),
    }
    return Instance(
        graph=bidirected(6, pairs),
        agents=(AgentSpec(0, 2, 9.0, 9.0, 0.0), AgentSpec(2, 0, 9.0, 9.0, 0.0)),
        epsilon=1,
    )


def _root(instance):
    result = solve(instance, SolveLimits(budget_s=30), keep_expansion_log=True)
    return result


def test_branch_structural_contract():
    inst = corridor_instance()
    from hfmapf.labeling import ConstraintSet, solve_nrhfsp

    empty = ConstraintSet()
    plans = tuple(solve_nrhfsp(inst, k).plan for k in range(2))
    from hfmapf.cbs import CTNode

    total = sum(p.cost for p in plans)
    conflicts = detect_conflicts(plans, 1)
    root = CTNode(
        constraints=(empty, empty),
        plans=plans,
        total_cost=total,
        n_conflicts=len(conflicts),
        first=conflicts[0],
    )
    children = branch(root, conflicts[0], inst, SolveLimits(budget_s=10))
    assert 0 < len(children) <= 2
    for child in children:
        assert child.parent is root
        k = child.replanned_agent
        assert k in conflicts[0].agents
        for other in range(2):
            if other != k:
                assert child.constraints[other] is root.constraints[other]
                assert child.plans[other] is root.plans[other]
        assert child.constraints[k].size() > root.constraints[k].size()
        assert child.total_cost >= root.total_cost


def test_branch_drops_infeasible_child():
    inst = Instance(
        graph=bidirected(2, {(0, 1): free_attr()}),
        agents=(AgentSpec(0, 1, 9.0, 9.0, 0.0), AgentSpec(1, 0, 9.0, 9.0, 0.0)),
        epsilon=1,
    )
    from hfmapf.labeling import ConstraintSet, solve_nrhfsp
    from hfmapf.cbs import CTNode

    plans = tuple(solve_nrhfsp(inst, k).plan for k in range(2))
    conflicts = detect_conflicts(plans, 1)
    root = CTNode(
        constraints=(ConstraintSet(), ConstraintSet()),
        plans=plans,
        total_cost=sum(p.cost for p in plans),
        n_conflicts=len(conflicts),
        first=conflicts[0],
    )
    children = branch(root, conflicts[0], inst, SolveLimits(budget_s=10))
    assert children == []  # neither agent has an alternative route


# ---------------------------------------------------------------------------
# solve


def test_solve_root_trivial_instance():
    g = bidirected(4, {(0, 1): free_attr(), (2, 3): free_attr()})
    inst = Instance(
        graph=g,
        agents=(AgentSpec(0, 1, 9.0, 9.0, 0.0), AgentSpec(2, 3, 9.0, 9.0, 0.0)),
        epsilon=1,
    )
    result = solve(inst)
    assert result.status == "solved"
    assert result.stats.ct_nodes_expanded == 1
    assert result.solution.total_cost == 2.0


def test_solve_corridor_matches_joint_oracle():
    inst = corridor_instance()
    result = solve(inst, SolveLimits(budget_s=30))
    joint = brute_force_joint(inst)
    assert result.status == "solved"
    assert result.solution.total_cost == joint[1]
    assert result.solution.total_cost == 6.0
    assert detect_conflicts(result.solution.plans, 1) == []


def test_solve_infeasible():
    inst = Instance(
        graph=bidirected(2, {(0, 1): free_attr()}),
        agents=(AgentSpec(0, 1, 9.0, 9.0, 0.0), AgentSpec(1, 0, 9.0, 9.0, 0.0)),
        epsilon=1,
    )
    assert solve(inst, SolveLimits(budget_s=30)).status == "infeasible"


def test_solve_timeout():
    inst = corridor_instance()
    assert solve(inst, SolveLimits(budget_s=0.0)).status == "timeout"


def test_solve_deterministic(rng):
    inst = generate_instance(GridSpec(rows=4, cols=4, seed=1234), 3)
    r1 = solve(inst, SolveLimits(budget_s=60))
    r2 = solve(inst, SolveLimits(budget_s=60))
    assert r1.status == r2.status
    if r1.status == "solved":
        assert r1.solution.plans == r2.solution.plans
        assert r1.solution.total_cost == r2.solution.total_cost
    assert r1.stats.ct_nodes_expanded == r2.stats.ct_nodes_expanded
    assert r1.stats.subproblem_calls == r2.stats.subproblem_calls


def test_solution_cost_is_sum_of_plans():
    inst = corridor_instance()
    result = solve(inst, SolveLimits(budget_s=30))
    total = 0.0
    for p in result.solution.plans:
        total += p.cost
    assert result.solution.total_cost == total


def test_replanned_agent_locality():
    inst = corridor_instance()
    result = solve(inst, SolveLimits(budget_s=30), keep_expansion_log=True)
    assert result.status == "solved"
    assert result.stats.expansion_log is not None
    # costs along the expansion order never undercut the root
    root_cost = result.stats.expansion_log[0][2]
    assert all(c >= root_cost for _, _, c in result.stats.expansion_log)


# ---------------------------------------------------------------------------
# solution files


def test_solution_file_round_trip():
    inst = corridor_instance()
    result = solve(inst, SolveLimits(budget_s=30))
    text = solution_to_text(result.solution)
    again = solution_from_text(text, inst)
    assert again.plans == result.solution.plans
    assert again.total_cost == result.solution.total_cost


def test_solution_file_rejects_tampering():
    inst = corridor_instance()
    result = solve(inst, SolveLimits(budget_s=30))
    text = solution_to_text(result.solution)
    broken = text.replace("agents = 2", "agents = 1")
    with pytest.raises(ValueError):
        solution_from_text(broken, inst)
    # a time edit must be caught by replay
    lines = text.splitlines()
    for idx, ln in enumerate(lines):
        parts = ln.split()
        if len(parts) == 3 and parts[2] in ("0", "1"):
            parts[1] = str(int(parts[1]) + 1)
            lines[idx] = " ".join(parts)
            break
    with pytest.raises(ValueError):
        solution_from_text("\n".join(lines), inst)
