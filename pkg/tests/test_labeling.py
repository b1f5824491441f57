import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from hfmapf import (
    AgentSpec,
    EdgeAttr,
    Graph,
    GridSpec,
    Instance,
    Label,
    build_grid,
    compute_heuristic,
    dominates,
    eff,
    extend,
    generate_instance,
    replay_plan,
    solve_nrhfsp,
    violates,
)
from hfmapf.labeling import ConstraintSet, SolveLimits, default_horizon
from hfmapf.oracle import OracleLimits, brute_force_single

from conftest import bidirected, free_attr, line_instance, random_constraints


def scipy_distances(graph: Graph, goal: int) -> np.ndarray:
    """Independent all-pairs route: distance to `goal` over travel_cost."""
    n = graph.node_count
    rows, cols, data = [], [], []
    for (i, j), attr in graph.edges.items():
        rows.append(i)
        cols.append(j)
        data.append(attr.travel_cost)
    mat = csr_matrix((data, (rows, cols)), shape=(n, n))
    dist = shortest_path(mat, method="D", indices=None)
    return dist[:, goal]


# ---------------------------------------------------------------------------
# heuristic


def test_heuristic_zero_at_goal():
    g = build_grid(GridSpec(rows=3, cols=3, seed=1))
    h = compute_heuristic(g, 0)
    assert h.cost_to_go[0] == 0.0


def test_heuristic_two_node():
    g = Graph(2, {(0, 1): EdgeAttr(5.0, 1, 0.0, 0.0, True)})
    h = compute_heuristic(g, 1)
    assert h.cost_to_go[0] == 5.0
    assert h.cost_to_go[1] == 0.0


def test_heuristic_matches_scipy_and_is_admissible(rng):
    for _ in range(5):
        g = build_grid(GridSpec(rows=5, cols=5, seed=int(rng.integers(0, 2**31))))
        goal = int(rng.integers(0, 25))
        h = compute_heuristic(g, goal).cost_to_go
        ref = scipy_distances(g, goal)
        assert np.allclose(h, ref)
        for (i, j), attr in g.edges.items():
            assert h[i] <= attr.travel_cost + h[j] + 1e-12


def test_heuristic_unreachable_is_inf():
    g = Graph(3, {(0, 1): EdgeAttr(1.0, 1, 0.0, 0.0, True)})
    h = compute_heuristic(g, 1)
    assert h.cost_to_go[2] == np.inf


# ---------------------------------------------------------------------------
# extend


def _label(b=10.0, q=5.0, node=0, cost=0.0, time=0):
    return Label(node=node, cost=cost, time=time, battery=b, fuel=q)


def test_extend_generator_on():
    attr = EdgeAttr(1.0, 1, 2.0, 3.0, True)
    out = extend(_label(b=10.0, q=5.0), (0, 1), attr, True, battery_max=20.0)
    assert (out.battery, out.fuel, out.time, out.cost) == (11.0, 2.0, 1, 1.0)
    assert out.gen_on_last_edge is True


def test_extend_generator_off():
    attr = EdgeAttr(1.0, 1, 2.0, 3.0, True)
    out = extend(_label(b=10.0, q=5.0), (0, 1), attr, False, battery_max=20.0)
    assert (out.battery, out.fuel) == (8.0, 5.0)
    assert out.gen_on_last_edge is False


def test_extend_overfill_is_infeasible_not_clamped():
    attr = EdgeAttr(1.0, 1, 0.0, 3.0, True)
    assert extend(_label(b=10.0, q=5.0), (0, 1), attr, True, battery_max=12.0) is None


def test_extend_noise_zone_blocks_generator():
    attr = EdgeAttr(1.0, 1, 0.5, 3.0, False)
    assert extend(_label(), (0, 1), attr, True, battery_max=20.0) is None
    assert extend(_label(), (0, 1), attr, False, battery_max=20.0) is not None


def test_extend_battery_floor_and_fuel_floor():
    drain = EdgeAttr(1.0, 1, 11.0, 0.0, True)
    assert extend(_label(b=10.0), (0, 1), drain, False, battery_max=20.0) is None
    thirsty = EdgeAttr(1.0, 1, 0.0, 6.0, True)
    assert extend(_label(q=5.0), (0, 1), thirsty, True, battery_max=20.0) is None


def test_extend_elementary_rule():
    attr = EdgeAttr(1.0, 1, 0.0, 0.0, True)
    root = _label(node=0)
    step = extend(root, (0, 1), attr, False, battery_max=20.0)
    assert extend(step, (1, 0), attr, False, battery_max=20.0) is None


def test_extend_requires_matching_tail():
    with pytest.raises(ValueError):
        extend(_label(node=3), (0, 1), free_attr(), False, battery_max=20.0)


# ---------------------------------------------------------------------------
# dominance and efficiency


def test_dominates_componentwise():
    a = Label(node=0, cost=3.0, time=2, battery=5.0, fuel=4.0)
    b = Label(node=0, cost=4.0, time=3, battery=4.0, fuel=3.0)
    assert dominates(a, b)
    assert not dominates(b, a)


def test_dominates_incomparable():
    a = Label(node=0, cost=3.0, time=2, battery=5.0, fuel=4.0)
    b = Label(node=0, cost=2.0, time=3, battery=6.0, fuel=4.0)
    assert not dominates(a, b)
    assert not dominates(b, a)


def test_dominates_exact_tie_broken_by_age():
    a = Label(node=0, cost=3.0, time=2, battery=5.0, fuel=4.0, order=0)
    b = Label(node=0, cost=3.0, time=2, battery=5.0, fuel=4.0, order=1)
    assert dominates(a, b)
    assert not dominates(b, a)


def test_dominates_requires_same_node():
    a = Label(node=0, cost=1.0, time=1, battery=1.0, fuel=1.0)
    b = Label(node=1, cost=1.0, time=1, battery=1.0, fuel=1.0)
    with pytest.raises(ValueError):
        dominates(a, b)


def test_eff_empty_stores():
    cand = _label()
    assert eff(cand, {}, {})


def test_eff_dominating_label_blocks():
    strong = Label(node=0, cost=1.0, time=1, battery=9.0, fuel=9.0)
    cand = Label(node=0, cost=2.0, time=2, battery=5.0, fuel=5.0, order=1)
    assert not eff(cand, {0: [strong]}, {})
    assert not eff(cand, {}, {0: [strong]})


def test_eff_incomparable_leaves_store_unchanged():
    stored = Label(node=0, cost=1.0, time=1, battery=1.0, fuel=9.0)
    cand = Label(node=0, cost=2.0, time=2, battery=5.0, fuel=5.0, order=1)
    open_store = {0: [stored]}
    assert eff(cand, open_store, {})
    assert open_store[0] == [stored]


def test_eff_prunes_dominated_open_labels():
    weak = Label(node=0, cost=5.0, time=5, battery=1.0, fuel=1.0)
    other = Label(node=0, cost=0.5, time=9, battery=1.0, fuel=1.0)
    cand = Label(node=0, cost=1.0, time=1, battery=5.0, fuel=5.0, order=1)
    open_store = {0: [weak, other]}
    assert eff(cand, open_store, {})
    assert open_store[0] == [other]


# ---------------------------------------------------------------------------
# constraints


def test_violates_empty():
    assert not violates((0, 1, 3, 4), ConstraintSet())


def test_violates_vertex_at_exact_arrival():
    cs = ConstraintSet(vertex_constraints=frozenset({(1, 4)}))
    assert violates((0, 1, 3, 4), cs)
    assert not violates((0, 1, 4, 5), cs)


def test_violates_edge_at_exact_departure():
    cs = ConstraintSet(edge_constraints=frozenset({((0, 1), 3)}))
    assert violates((0, 1, 3, 4), cs)
    assert not violates((0, 1, 2, 3), cs)
    assert not violates((1, 0, 3, 4), cs)


def test_constraint_times_must_be_non_negative():
    with pytest.raises(ValueError):
        ConstraintSet(vertex_constraints=frozenset({(0, -1)}))


# ---------------------------------------------------------------------------
# solve


def test_solve_two_node_line():
    inst = line_instance(2)
    result = solve_nrhfsp(inst, 0)
    assert result.status == "found"
    assert result.plan.path == (0, 1)
    assert result.plan.cost == 1.0
    assert result.plan.arrival_times == (0, 1)


def test_solve_free_grid_equals_classical_shortest_path(rng):
    for _ in range(5):
        g = build_grid(
            GridSpec(
                rows=5,
                cols=5,
                noise_density=0.0,
                seed=int(rng.integers(0, 2**31)),
                energy_cost_range=(0.0, 0.0),
                recharge_range=(0.0, 0.0),
            )
        )
        agent = AgentSpec(0, 24, 1e9, 1e9, 0.0)
        inst = Instance(graph=g, agents=(agent,), epsilon=1)
        result = solve_nrhfsp(inst, 0)
        assert result.status == "found"
        assert result.plan.cost == pytest.approx(scipy_distances(g, 24)[0], abs=1e-12)


def test_solve_matches_oracle_with_random_constraints(rng):
    hits = 0
    for _ in range(40):
        inst = generate_instance(
            GridSpec(
                rows=4,
                cols=4,
                noise_density=float(rng.uniform(0, 0.5)),
                seed=int(rng.integers(0, 2**63)),
            ),
            1,
        )
        cs = random_constraints(rng, inst)
        result = solve_nrhfsp(inst, 0, cs, SolveLimits(horizon=12))
        plan = brute_force_single(inst, 0, cs, OracleLimits(horizon=12))
        if plan is None:
            assert result.status == "infeasible"
        else:
            hits += 1
            assert result.status == "found"
            assert result.plan.cost == plan.cost
    assert hits > 5  # the sweep must exercise feasible cases


def test_solve_respects_constraints_on_every_transition(rng):
    inst = generate_instance(GridSpec(rows=4, cols=4, seed=5), 1)
    cs = random_constraints(rng, inst, max_entries=6)
    result = solve_nrhfsp(inst, 0, cs)
    if result.status == "found":
        p = result.plan
        for k in range(len(p.path) - 1):
            transition = (
                p.path[k],
                p.path[k + 1],
                p.arrival_times[k],
                p.arrival_times[k + 1],
            )
            assert not violates(transition, cs)


def test_solve_infeasible_when_goal_unreachable():
    g = Graph(3, {(0, 1): EdgeAttr(1.0, 1, 0.0, 0.0, True)})
    inst = Instance(
        graph=g, agents=(AgentSpec(0, 2, 10.0, 12.0, 5.0),), epsilon=1
    )
    assert solve_nrhfsp(inst, 0).status == "infeasible"


def test_solve_needs_generator_to_cross():
    # battery covers one edge; the recharge on the first edge funds the
    # second, where the noise restriction keeps the generator off
    pairs = {
        (0, 1): EdgeAttr(1.0, 1, 1.0, 1.0, True),
        (1, 2): EdgeAttr(1.0, 1, 1.0, 0.0, False),
    }
    g = Graph(3, {e: a for e, a in pairs.items()})
    inst = Instance(
        graph=g,
        agents=(AgentSpec(0, 2, battery_init=1.0, battery_max=2.0, fuel_init=1.0),),
        epsilon=1,
    )
    result = solve_nrhfsp(inst, 0)
    assert result.status == "found"
    assert result.plan.gen_pattern == (True, False)
    assert result.plan.final_battery == 0.0
    assert result.plan.final_fuel == 0.0
    # without fuel the crossing is impossible
    dry = Instance(
        graph=g,
        agents=(AgentSpec(0, 2, battery_init=1.0, battery_max=2.0, fuel_init=0.0),),
        epsilon=1,
    )
    assert solve_nrhfsp(dry, 0).status == "infeasible"


def test_solve_timeout_status():
    inst = line_instance(2)
    result = solve_nrhfsp(inst, 0, None, SolveLimits(budget_s=0.0))
    assert result.status == "timeout"


def test_solve_vertex_constraint_on_start_is_infeasible():
    inst = line_instance(2)
    cs = ConstraintSet(vertex_constraints=frozenset({(0, 0)}))
    assert solve_nrhfsp(inst, 0, cs).status == "infeasible"


def test_solve_unknown_engine_rejected():
    inst = line_instance(2)
    with pytest.raises(ValueError):
        solve_nrhfsp(inst, 0, None, SolveLimits(engine="fortran"))


def test_solve_horizon_prunes_long_routes():
    inst = line_instance(4)
    assert solve_nrhfsp(inst, 0, None, SolveLimits(horizon=2)).status == "infeasible"
    assert solve_nrhfsp(inst, 0, None, SolveLimits(horizon=3)).status == "found"


def test_default_horizon_covers_elementary_paths():
    inst = line_instance(5)
    assert default_horizon(inst.graph, 0) >= 4


def test_plan_replay_reproduces_solver_plan(rng):
    for _ in range(10):
        inst = generate_instance(
            GridSpec(rows=4, cols=4, seed=int(rng.integers(0, 2**63))), 1
        )
        result = solve_nrhfsp(inst, 0)
        if result.status != "found":
            continue
        p = result.plan
        again = replay_plan(inst.graph, inst.agents[0], p.path, p.gen_pattern)
        assert again == p


def test_stats_are_populated():
    inst = line_instance(3)
    result = solve_nrhfsp(inst, 0)
    assert result.stats.labels_created >= 2
    assert result.stats.labels_expanded >= 2
    assert result.stats.peak_open >= 1
