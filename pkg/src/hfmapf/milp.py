"""Mixed-integer model export and solution cross-checking.

``export_milp`` writes the full fleet-routing model as a solver-readable LP
text file: binary edge-use and generator variables, continuous battery, fuel
and time states, degree/flow rows, resource recurrences, and the big-M
linearization of the vertex- and edge-separation disjunctions.
``embed_solution`` maps a planner solution onto the model's variables and
evaluates every row, reporting violations by row tag; no external solver is
invoked by the package itself.

Row tags (used in names, the sidecar, and violation reports):

====  =======================================================
tag   meaning
====  =======================================================
2,3   unit out-degree at start / in-degree at goal
4     flow conservation at intermediate nodes
5     battery bounds 0..battery_max (bounds entries)
6     battery initial state
7,8   battery recurrence upper/lower (equality pair on used edges)
9     fuel recurrence upper
10    fuel non-negativity (bounds) and fuel initial state
11    generator only on traversed edges
12    generator banned on noise-restricted edges
13    time initial state (plus plain 0..M variable bounds)
14    time recurrence (equality pair on used edges)
15    vertex separation disjunction; 15aux = visit gating
16    opposing-edge separation disjunction
====  =======================================================
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .labeling import Plan
from .model import Instance


class ExportError(ValueError):
    """The model cannot be exported safely (for example a big-M constant
    below the computed floor, which risks silently cutting solutions)."""


@dataclass(frozen=True)
class MilpConfig:
    """Export knobs.  ``big_m=None`` computes a safe constant; supplying a
    smaller value than the instance floor is refused."""

    big_m: float | None = None
    epsilon: float | None = None
    naming_version: int = 1


@dataclass(frozen=True)
class LinearRow:
    name: str
    tag: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # "<=" | ">=" | "="
    rhs: float


@dataclass(frozen=True)
class VarBound:
    var: str
    lo: float
    hi: float | None
    tag: str


@dataclass(frozen=True)
class ModelFile:
    objective: tuple[tuple[str, float], ...]
    rows: tuple[LinearRow, ...]
    bounds: tuple[VarBound, ...]
    binaries: tuple[str, ...]
    name_map: dict[str, tuple]
    big_m: float
    epsilon: float
    instance: Instance = field(repr=False)

    def to_lp(self) -> str:
        out = ["\\ hfmapf model format v1", "Minimize"]
        out.append(" obj: " + _terms(self.objective))
        out.append("Subject To")
        for r in self.rows:
            sense = "=" if r.sense == "=" else r.sense
            out.append(f" {r.name}: {_terms(r.coeffs)} {sense} {r.rhs!r}")
        out.append("Bounds")
        for b in self.bounds:
            if b.hi is None:
                out.append(f" {b.var} >= {b.lo!r}")
            else:
                out.append(f" {b.lo!r} <= {b.var} <= {b.hi!r}")
        out.append("Binaries")
        for v in self.binaries:
            out.append(f" {v}")
        out.append("End")
        return "\n".join(out) + "\n"

    def name_map_text(self) -> str:
        out = ["# variable kind indices"]
        for var, info in self.name_map.items():
            out.append(var + "\t" + "\t".join(str(x) for x in info))
        return "\n".join(out) + "\n"


def _terms(coeffs) -> str:
    parts = []
    for i, (var, c) in enumerate(coeffs):
        if i == 0:
            parts.append(f"{c!r} {var}" if c >= 0 else f"- {-c!r} {var}")
        elif c >= 0:
            parts.append(f"+ {c!r} {var}")
        else:
            parts.append(f"- {-c!r} {var}")
    return " ".join(parts) if parts else "0"


def big_m_floor(instance: Instance) -> float:
    """Computed lower bound for a safe big-M: total of per-edge worst-case
    time/energy movements plus the largest initial or capacity value."""
    total = 0.0
    for a in instance.graph.edges.values():
        total += max(float(a.travel_time), a.energy_cost, a.recharge)
    peak = 0.0
    for ag in instance.agents:
        peak = max(
            peak, ag.battery_init, ag.battery_max, ag.fuel_init, float(ag.start_time)
        )
    return total + peak


def export_milp(instance: Instance, config: MilpConfig | None = None) -> ModelFile:
    """Build the complete model; deterministic, so equal inputs give
    byte-identical files.  Internal row-count assertions verify the closed
    forms for every tag."""
    config = config or MilpConfig()
    eps = float(config.epsilon if config.epsilon is not None else instance.epsilon)
    if eps <= 0:
        raise ExportError("epsilon must be positive")
    floor = big_m_floor(instance)
    if config.big_m is None:
        big_m = floor + eps + 1.0
    else:
        if config.big_m < floor:
            raise ExportError(
                f"big_m {config.big_m!r} is below the computed floor {floor!r}; "
                "export refused (risks silent infeasibility or cut solutions)"
            )
        big_m = float(config.big_m)
    g = instance.graph
    n = g.node_count
    edges = list(g.edges.items())  # sorted by (i, j) at construction
    agents = list(instance.agents)
    nu = len(agents)
    pairs = [(a, b) for a in range(nu) for b in range(a + 1, nu)]
    # time values can never exceed this; the big-M rows need slack beyond it
    t_reach = max((ag.start_time for ag in agents), default=0) + sum(
        float(a.travel_time) for a in g.edges.values()
    )
    if big_m < t_reach + eps:
        raise ExportError(
            f"big_m {big_m!r} cannot absorb the time range {t_reach!r} plus "
            f"epsilon {eps!r}"
        )

    name_map: dict[str, tuple] = {}
    binaries: list[str] = []
    objective: list[tuple[str, float]] = []
    rows: list[LinearRow] = []
    bounds: list[VarBound] = []

    def xv(k, i, j):
        return f"x_{k}_{i}_{j}"

    def gv(k, i, j):
        return f"g_{k}_{i}_{j}"

    def bv(k, i):
        return f"b_{k}_{i}"

    def qv(k, i):
        return f"q_{k}_{i}"

    def tv(k, i):
        return f"t_{k}_{i}"

    for k in range(nu):
        for (i, j), attr in edges:
            name_map[xv(k, i, j)] = ("x", k, i, j)
            binaries.append(xv(k, i, j))
            objective.append((xv(k, i, j), attr.travel_cost))
        for (i, j), _ in edges:
            name_map[gv(k, i, j)] = ("g", k, i, j)
            binaries.append(gv(k, i, j))
        for i in range(n):
            name_map[bv(k, i)] = ("b", k, i)
        for i in range(n):
            name_map[qv(k, i)] = ("q", k, i)
        for i in range(n):
            name_map[tv(k, i)] = ("t", k, i)

    # tag 2/3: unit degree at the endpoints
    for k, ag in enumerate(agents):
        coeffs = [(xv(k, ag.start, j), 1.0) for j, _ in g.out_edges[ag.start]]
        rows.append(LinearRow(f"r2_a{k}", "2", tuple(coeffs), "=", 1.0))
    for k, ag in enumerate(agents):
        coeffs = [(xv(k, i, ag.goal), 1.0) for i, _ in g.in_edges[ag.goal]]
        rows.append(LinearRow(f"r3_a{k}", "3", tuple(coeffs), "=", 1.0))
    # tag 4: flow conservation elsewhere
    for k, ag in enumerate(agents):
        for i in range(n):
            if i in (ag.start, ag.goal):
                continue
            coeffs = [(xv(k, jj, i), 1.0) for jj, _ in g.in_edges[i]]
            coeffs += [(xv(k, i, jj), -1.0) for jj, _ in g.out_edges[i]]
            rows.append(LinearRow(f"r4_a{k}_n{i}", "4", tuple(coeffs), "=", 0.0))
    # tag 5: battery bounds away from the start
    for k, ag in enumerate(agents):
        for i in range(n):
            if i == ag.start:
                continue
            bounds.append(VarBound(bv(k, i), 0.0, ag.battery_max, "5"))
    # tag 6: battery initial state
    for k, ag in enumerate(agents):
        rows.append(
            LinearRow(f"r6_a{k}", "6", ((bv(k, ag.start), 1.0),), "=", ag.battery_init)
        )
    # tags 7/8: battery recurrence pinned to equality on used edges
    for k in range(nu):
        for (i, j), attr in edges:
            coeffs = (
                (bv(k, j), 1.0),
                (bv(k, i), -1.0),
                (gv(k, i, j), -attr.recharge),
                (xv(k, i, j), big_m),
            )
            rows.append(
                LinearRow(
                    f"r7_a{k}_e{i}_{j}", "7", coeffs, "<=", big_m - attr.energy_cost
                )
            )
    for k in range(nu):
        for (i, j), attr in edges:
            coeffs = (
                (bv(k, j), 1.0),
                (bv(k, i), -1.0),
                (gv(k, i, j), -attr.recharge),
                (xv(k, i, j), -big_m),
            )
            rows.append(
                LinearRow(
                    f"r8_a{k}_e{i}_{j}", "8", coeffs, ">=", -big_m - attr.energy_cost
                )
            )
    # tag 9: fuel recurrence upper bound on used edges
    for k in range(nu):
        for (i, j), attr in edges:
            coeffs = (
                (qv(k, j), 1.0),
                (qv(k, i), -1.0),
                (gv(k, i, j), attr.recharge),
                (xv(k, i, j), big_m),
            )
            rows.append(LinearRow(f"r9_a{k}_e{i}_{j}", "9", coeffs, "<=", big_m))
    # tag 10: fuel bounds everywhere plus initial state
    for k in range(nu):
        for i in range(n):
            bounds.append(VarBound(qv(k, i), 0.0, None, "10"))
    for k, ag in enumerate(agents):
        rows.append(
            LinearRow(f"r10_a{k}", "10", ((qv(k, ag.start), 1.0),), "=", ag.fuel_init)
        )
    # tag 11/12: generator needs the edge and a quiet-zone-free edge
    for k in range(nu):
        for (i, j), _ in edges:
            rows.append(
                LinearRow(
                    f"r11_a{k}_e{i}_{j}",
                    "11",
                    ((gv(k, i, j), 1.0), (xv(k, i, j), -1.0)),
                    "<=",
                    0.0,
                )
            )
    for k in range(nu):
        for (i, j), attr in edges:
            rows.append(
                LinearRow(
                    f"r12_a{k}_e{i}_{j}",
                    "12",
                    ((gv(k, i, j), 1.0),),
                    "<=",
                    1.0 if attr.gen_allowed else 0.0,
                )
            )
    # tag 13: time initial state and plain variable ranges
    for k, ag in enumerate(agents):
        rows.append(
            LinearRow(
                f"r13_a{k}", "13", ((tv(k, ag.start), 1.0),), "=", float(ag.start_time)
            )
        )
    for k in range(nu):
        for i in range(n):
            bounds.append(VarBound(tv(k, i), 0.0, big_m, "13"))
    # tag 14: time recurrence pinned to equality on used edges (there is no
    # wait action, so arrival times are exact sums; a one-sided row would
    # let the model retime around the separation constraints)
    for k in range(nu):
        for (i, j), attr in edges:
            coeffs = (
                (tv(k, j), 1.0),
                (tv(k, i), -1.0),
                (xv(k, i, j), -big_m),
            )
            rows.append(
                LinearRow(
                    f"r14l_a{k}_e{i}_{j}",
                    "14",
                    coeffs,
                    ">=",
                    attr.travel_time - big_m,
                )
            )
            coeffs = (
                (tv(k, j), 1.0),
                (tv(k, i), -1.0),
                (xv(k, i, j), big_m),
            )
            rows.append(
                LinearRow(
                    f"r14u_a{k}_e{i}_{j}",
                    "14",
                    coeffs,
                    "<=",
                    attr.travel_time + big_m,
                )
            )
    # tag 15: vertex separation |t_a_i - t_b_i| >= eps when both visit i.
    # yv picks the disjunct; uv deactivates the pair when either agent skips
    # the node (its time variable is meaningless there).
    for a, b in pairs:
        for i in range(n):
            yv = f"yv_{a}_{b}_{i}"
            uv = f"uv_{a}_{b}_{i}"
            name_map[yv] = ("yv", a, b, i)
            name_map[uv] = ("uv", a, b, i)
            binaries.append(yv)
            binaries.append(uv)
            rows.append(
                LinearRow(
                    f"r15a_p{a}_{b}_n{i}",
                    "15",
                    ((tv(a, i), 1.0), (tv(b, i), -1.0), (yv, -big_m), (uv, big_m)),
                    ">=",
                    eps - big_m,
                )
            )
            rows.append(
                LinearRow(
                    f"r15b_p{a}_{b}_n{i}",
                    "15",
                    ((tv(b, i), 1.0), (tv(a, i), -1.0), (yv, big_m), (uv, big_m)),
                    ">=",
                    eps,
                )
            )
            gate: list[tuple[str, float]] = [(uv, 1.0)]
            rhs = 2.0
            for k, ag in ((a, agents[a]), (b, agents[b])):
                if i == ag.start:
                    rhs -= 1.0  # the start is always visited
                else:
                    gate += [(xv(k, jj, i), 1.0) for jj, _ in g.in_edges[i]]
            rows.append(
                LinearRow(f"r15g_p{a}_{b}_n{i}", "15aux", tuple(gate), "<=", rhs)
            )
    # tag 16: opposing-edge separation, active only when both directions are
    # used; the epsilon terms deactivate the row otherwise.
    for a, b in pairs:
        for (i, j), _ in edges:
            if (j, i) not in g.edges:
                continue
            ye = f"ye_{a}_{b}_{i}_{j}"
            name_map[ye] = ("ye", a, b, i, j)
            binaries.append(ye)
            rows.append(
                LinearRow(
                    f"r16a_p{a}_{b}_e{i}_{j}",
                    "16",
                    (
                        (tv(a, j), 1.0),
                        (tv(b, i), -1.0),
                        (xv(a, i, j), -eps),
                        (xv(b, j, i), -eps),
                        (ye, big_m),
                    ),
                    ">=",
                    -eps,
                )
            )
            rows.append(
                LinearRow(
                    f"r16b_p{a}_{b}_e{i}_{j}",
                    "16",
                    (
                        (tv(b, i), 1.0),
                        (tv(a, j), -1.0),
                        (xv(a, i, j), -eps),
                        (xv(b, j, i), -eps),
                        (ye, -big_m),
                    ),
                    ">=",
                    -eps - big_m,
                )
            )

    m = len(edges)
    mrev_total = sum(1 for (i, j) in g.edges if (j, i) in g.edges)
    p = len(pairs)
    expected_rows = {
        "2": nu,
        "3": nu,
        "4": nu * (n - 2),
        "6": nu,
        "7": nu * m,
        "8": nu * m,
        "9": nu * m,
        "10": nu,
        "11": nu * m,
        "12": nu * m,
        "13": nu,
        "14": 2 * nu * m,
        "15": 2 * p * n,
        "15aux": p * n,
        "16": 2 * p * mrev_total,
    }
    got_rows: dict[str, int] = {}
    for r in rows:
        got_rows[r.tag] = got_rows.get(r.tag, 0) + 1
    for tag, count in expected_rows.items():
        if got_rows.get(tag, 0) != count:
            raise AssertionError(
                f"row count for tag {tag}: expected {count}, got {got_rows.get(tag, 0)}"
            )
    expected_bounds = {"5": nu * (n - 1), "10": nu * n, "13": nu * n}
    got_bounds: dict[str, int] = {}
    for bd in bounds:
        got_bounds[bd.tag] = got_bounds.get(bd.tag, 0) + 1
    if got_bounds != expected_bounds:
        raise AssertionError(
            f"bound counts {got_bounds} do not match expected {expected_bounds}"
        )

    return ModelFile(
        objective=tuple(objective),
        rows=tuple(rows),
        bounds=tuple(bounds),
        binaries=tuple(binaries),
        name_map=name_map,
        big_m=big_m,
        epsilon=eps,
        instance=instance,
    )


# ---------------------------------------------------------------------------
# solution embedding


@dataclass(frozen=True)
class Violation:
    row: str
    tag: str
    lhs: float
    sense: str
    rhs: float


@dataclass(frozen=True)
class EmbedReport:
    assignment: dict[str, float]
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _raw_trajectory(graph, agent, plan: Plan):
    """Battery/fuel values implied by a plan's pattern with no feasibility
    checks; rule breaches must surface as row violations, not exceptions."""
    b = [agent.battery_init]
    q = [agent.fuel_init]
    for k in range(len(plan.path) - 1):
        attr = graph.edges[(plan.path[k], plan.path[k + 1])]
        if plan.gen_pattern[k]:
            b.append(b[-1] - attr.energy_cost + attr.recharge)
            q.append(q[-1] - attr.recharge)
        else:
            b.append(b[-1] - attr.energy_cost)
            q.append(q[-1])
    return b, q


def embed_solution(
    model: ModelFile, plans, tol: float = 1e-9
) -> EmbedReport:
    """Evaluate every model row under the variable assignment a set of plans
    implies.  ``plans`` is one plan per agent (a Solution's plans attribute
    works directly)."""
    instance = model.instance
    if len(plans) != len(instance.agents):
        raise ValueError("plan count does not match the model's agent count")
    g = instance.graph
    eps = model.epsilon
    val = {v: 0.0 for v in model.name_map}

    visited: list[dict[int, int]] = []
    for k, plan in enumerate(plans):
        agent = instance.agents[k]
        times = dict(zip(plan.path, plan.arrival_times))
        visited.append(times)
        bb, qq = _raw_trajectory(g, agent, plan)
        for idx in range(len(plan.path) - 1):
            i, j = plan.path[idx], plan.path[idx + 1]
            val[f"x_{k}_{i}_{j}"] = 1.0
            if plan.gen_pattern[idx]:
                val[f"g_{k}_{i}_{j}"] = 1.0
        for idx, node in enumerate(plan.path):
            val[f"b_{k}_{node}"] = bb[idx]
            val[f"q_{k}_{node}"] = qq[idx]
            val[f"t_{k}_{node}"] = float(plan.arrival_times[idx])

    for info in model.name_map.values():
        if info[0] == "yv":
            _, a, b, i = info
            ta, tb = visited[a].get(i), visited[b].get(i)
            if ta is not None and tb is not None:
                val[f"uv_{a}_{b}_{i}"] = 0.0
                val[f"yv_{a}_{b}_{i}"] = 1.0 if ta - tb >= eps else 0.0
            else:
                val[f"uv_{a}_{b}_{i}"] = 1.0
                val[f"yv_{a}_{b}_{i}"] = 0.0
        elif info[0] == "ye":
            _, a, b, i, j = info
            xa = val[f"x_{a}_{i}_{j}"]
            xb = val[f"x_{b}_{j}_{i}"]
            diff = val[f"t_{a}_{j}"] - val[f"t_{b}_{i}"]
            val[info_to_var(info)] = 0.0 if diff >= eps * (xa + xb - 1.0) else 1.0

    violations: list[Violation] = []
    for row in model.rows:
        lhs = 0.0
        for var, coeff in row.coeffs:
            lhs += coeff * val[var]
        if row.sense == "<=":
            bad = lhs > row.rhs + tol
        elif row.sense == ">=":
            bad = lhs < row.rhs - tol
        else:
            bad = abs(lhs - row.rhs) > tol
        if bad:
            violations.append(Violation(row.name, row.tag, lhs, row.sense, row.rhs))
    for bd in model.bounds:
        v = val[bd.var]
        if v < bd.lo - tol or (bd.hi is not None and v > bd.hi + tol):
            violations.append(
                Violation(f"bound:{bd.var}", bd.tag, v, "in", bd.lo)
            )
    return EmbedReport(assignment=val, violations=tuple(violations))


def info_to_var(info: tuple) -> str:
    return f"{info[0]}_" + "_".join(str(x) for x in info[1:])
