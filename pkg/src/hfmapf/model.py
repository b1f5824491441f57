"""Problem data model: directed graphs with travel/energy/noise edge
attributes, agent fleets, instance validation, the text file format, and the
randomized grid instance generator.

Conventions baked into the model:

* time is integer-valued; every edge takes ``travel_time >= 1`` steps,
* there is no wait action (no self-loops), so paths are elementary,
* ``gen_allowed`` is False on edges inside noise-restricted zones, where the
  onboard generator must stay off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

FORMAT_HEADER = "hfmapf-instance v1"

# Energy-like edge attributes are drawn on this lattice by the generator so
# that independently generated paths can reach bit-identical battery levels
# (quarter units are exact in binary floating point).
ENERGY_LATTICE = 0.25


class ParseError(ValueError):
    """Instance text could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(ValueError):
    """A parsed or constructed instance breaks model invariants."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class EdgeAttr:
    """Attributes of one directed edge."""

    travel_cost: float  # objective contribution (D)
    travel_time: int  # integer time steps (T), >= 1
    energy_cost: float  # battery discharged by the traversal (C)
    recharge: float  # battery recharged when the generator runs (Z)
    gen_allowed: bool  # False in noise-restricted zones (G)


class Graph:
    """Directed graph over dense node ids ``0..node_count-1``.

    Immutable after construction and safe to share across workers.
    ``out_edges[i]`` / ``in_edges[i]`` list ``(neighbor, attr)`` pairs sorted
    by neighbor id; this ordering is part of the deterministic behaviour of
    every search in the package.
    """

    __slots__ = ("node_count", "edges", "out_edges", "in_edges", "_csr")

    def __init__(self, node_count: int, edges: dict[tuple[int, int], EdgeAttr]):
        if node_count <= 0:
            raise ValueError("graph needs at least one node")
        out: list[list[tuple[int, EdgeAttr]]] = [[] for _ in range(node_count)]
        inc: list[list[tuple[int, EdgeAttr]]] = [[] for _ in range(node_count)]
        for (i, j), attr in edges.items():
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise ValueError(f"edge ({i},{j}) endpoint out of range")
            if i == j:
                raise ValueError(f"self-loop ({i},{i}) not allowed")
            out[i].append((j, attr))
            inc[j].append((i, attr))
        for lst in out:
            lst.sort(key=lambda e: e[0])
        for lst in inc:
            lst.sort(key=lambda e: e[0])
        self.node_count = node_count
        self.edges = dict(sorted(edges.items()))
        self.out_edges = tuple(tuple(lst) for lst in out)
        self.in_edges = tuple(tuple(lst) for lst in inc)
        self._csr = None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.node_count == other.node_count
            and self.edges == other.edges
        )

    def max_travel_time(self) -> int:
        return max((a.travel_time for a in self.edges.values()), default=1)

    def csr(self):
        """Arrays for the search kernels (built once, then cached).

        Returns ``(indptr, nbr, eid, d, t, c, z, g, edge_index)`` where
        ``edge_index`` maps a directed pair to its dense edge id.
        """
        if self._csr is None:
            n = self.node_count
            m = len(self.edges)
            indptr = np.zeros(n + 1, dtype=np.int32)
            nbr = np.zeros(m, dtype=np.int32)
            eid = np.zeros(m, dtype=np.int32)
            d = np.zeros(m, dtype=np.float64)
            t = np.zeros(m, dtype=np.int32)
            c = np.zeros(m, dtype=np.float64)
            z = np.zeros(m, dtype=np.float64)
            g = np.zeros(m, dtype=np.uint8)
            edge_index: dict[tuple[int, int], int] = {}
            k = 0
            for i in range(n):
                indptr[i] = k
                for j, attr in self.out_edges[i]:
                    nbr[k] = j
                    edge_index[(i, j)] = k
                    eid[k] = k
                    d[k] = attr.travel_cost
                    t[k] = attr.travel_time
                    c[k] = attr.energy_cost
                    z[k] = attr.recharge
                    g[k] = 1 if attr.gen_allowed else 0
                    k += 1
            indptr[n] = k
            for arr in (indptr, nbr, eid, d, t, c, z, g):
                arr.setflags(write=False)
            self._csr = (indptr, nbr, eid, d, t, c, z, g, edge_index)
        return self._csr


@dataclass(frozen=True)
class AgentSpec:
    """One UAV: endpoints, initial stores, and start time."""

    start: int
    goal: int
    battery_init: float
    battery_max: float
    fuel_init: float
    start_time: int = 0


@dataclass(frozen=True)
class Instance:
    """A complete problem statement: graph, fleet, and conflict threshold."""

    graph: Graph
    agents: tuple[AgentSpec, ...]
    epsilon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))


def _check_attr(i: int, j: int, attr: EdgeAttr, out: list[str]) -> None:
    label = f"edge ({i},{j})"
    if not isinstance(attr.travel_time, int) or attr.travel_time < 1:
        out.append(f"{label}: travel_time must be an integer >= 1")
    for name in ("travel_cost", "energy_cost", "recharge"):
        v = getattr(attr, name)
        if not math.isfinite(v) or v < 0:
            out.append(f"{label}: {name} must be finite and non-negative")


def validate(instance: Instance) -> list[str]:
    """Collect every invariant violation (empty list means the instance is ok)."""
    v: list[str] = []
    g = instance.graph
    for (i, j), attr in g.edges.items():
        _check_attr(i, j, attr, v)
    if not isinstance(instance.epsilon, int) or instance.epsilon < 1:
        v.append("epsilon must be a positive integer")
    starts: dict[int, int] = {}
    for k, a in enumerate(instance.agents):
        label = f"agent {k}"
        if not (0 <= a.start < g.node_count):
            v.append(f"{label}: start {a.start} out of range")
        if not (0 <= a.goal < g.node_count):
            v.append(f"{label}: goal {a.goal} out of range")
        if a.start == a.goal:
            v.append(f"{label}: start equals goal")
        if a.start in starts:
            v.append(f"agents {starts[a.start]} and {k} share start node {a.start}")
        else:
            starts[a.start] = k
        if not math.isfinite(a.battery_max) or a.battery_max <= 0:
            v.append(f"{label}: battery_max must be positive and finite")
        if not math.isfinite(a.battery_init) or a.battery_init < 0:
            v.append(f"{label}: battery_init must be non-negative and finite")
        elif a.battery_init > a.battery_max:
            v.append(f"{label}: battery_init exceeds battery_max")
        if not math.isfinite(a.fuel_init) or a.fuel_init < 0:
            v.append(f"{label}: fuel_init must be non-negative and finite")
        if not isinstance(a.start_time, int) or a.start_time < 0:
            v.append(f"{label}: start_time must be a non-negative integer")
    return v


# ---------------------------------------------------------------------------
# grid generator


@dataclass(frozen=True)
class GridSpec:
    """Parameters for the randomized 4-connected grid generator.

    ``energy_cost_range`` and ``recharge_range`` are drawn on a 0.25 lattice
    (bounds are snapped to it); the remaining ranges are continuous uniform.
    Defaults are sized so that battery alone rarely covers long routes, the
    generator matters, and fuel supports only a handful of recharges.
    """

    rows: int
    cols: int
    noise_density: float = 0.25
    seed: int = 0
    travel_cost_range: tuple[float, float] = (1.0, 4.0)
    energy_cost_range: tuple[float, float] = (0.25, 1.25)
    recharge_range: tuple[float, float] = (1.0, 3.0)
    battery_init_range: tuple[float, float] = (6.0, 14.0)
    battery_max_range: tuple[float, float] = (10.0, 20.0)
    fuel_init_range: tuple[float, float] = (2.0, 8.0)

    def check(self) -> None:
        errs = []
        if self.rows < 2 or self.cols < 2:
            errs.append("rows and cols must both be >= 2")
        if not (0.0 <= self.noise_density <= 1.0):
            errs.append("noise_density must lie in [0, 1]")
        for name in (
            "travel_cost_range",
            "energy_cost_range",
            "recharge_range",
            "battery_init_range",
            "battery_max_range",
            "fuel_init_range",
        ):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or lo > hi:
                errs.append(f"{name} must satisfy 0 <= min <= max (finite)")
        if errs:
            raise ValidationError(errs)


def _snap(x: float) -> float:
    return round(x / ENERGY_LATTICE) * ENERGY_LATTICE


def _draw_lattice(rng: np.random.Generator, lo: float, hi: float) -> float:
    lo, hi = _snap(lo), _snap(hi)
    steps = int(round((hi - lo) / ENERGY_LATTICE))
    return lo + int(rng.integers(0, steps + 1)) * ENERGY_LATTICE


def _grid_pairs(rows: int, cols: int) -> list[tuple[int, int]]:
    """Undirected adjacencies of the rows x cols grid, in canonical order."""
    pairs = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                pairs.append((u, u + 1))
            if r + 1 < rows:
                pairs.append((u, u + cols))
    return pairs


def _build_grid(rng: np.random.Generator, spec: GridSpec) -> Graph:
    pairs = _grid_pairs(spec.rows, spec.cols)
    n_noise = int(round(spec.noise_density * len(pairs)))
    noisy = set(rng.permutation(len(pairs))[:n_noise].tolist())
    edges: dict[tuple[int, int], EdgeAttr] = {}
    for idx, (u, w) in enumerate(pairs):
        allowed = idx not in noisy
        for (i, j) in ((u, w), (w, u)):
            edges[(i, j)] = EdgeAttr(
                travel_cost=float(rng.uniform(*spec.travel_cost_range)),
                travel_time=1,
                energy_cost=_draw_lattice(rng, *spec.energy_cost_range),
                recharge=_draw_lattice(rng, *spec.recharge_range),
                gen_allowed=allowed,
            )
    return Graph(spec.rows * spec.cols, edges)


def build_grid(spec: GridSpec) -> Graph:
    """4-connected grid with one directed edge per direction of each adjacency.

    All draws come from a PCG64 stream seeded with ``spec.seed``, so equal
    specs give bit-identical graphs. ``gen_allowed`` is symmetric; the other
    attributes are drawn independently per direction.
    """
    spec.check()
    return _build_grid(np.random.Generator(np.random.PCG64(spec.seed)), spec)


def generate_instance(spec: GridSpec, n_agents: int) -> Instance:
    """Random instance on a generated grid: distinct starts, goal != own start,
    all agents launching at time 0."""
    spec.check()
    node_count = spec.rows * spec.cols
    if n_agents < 1:
        raise ValidationError(["n_agents must be >= 1"])
    if n_agents > node_count:
        raise ValidationError(
            [f"cannot place {n_agents} distinct starts on {node_count} nodes"]
        )
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    graph = _build_grid(rng, spec)
    starts = rng.permutation(node_count)[:n_agents].tolist()
    agents = []
    for start in starts:
        goal = int(rng.integers(0, node_count - 1))
        if goal >= start:
            goal += 1
        battery_max = float(rng.uniform(*spec.battery_max_range))
        battery_init = min(float(rng.uniform(*spec.battery_init_range)), battery_max)
        fuel_init = float(rng.uniform(*spec.fuel_init_range))
        agents.append(
            AgentSpec(
                start=int(start),
                goal=goal,
                battery_init=battery_init,
                battery_max=battery_max,
                fuel_init=fuel_init,
                start_time=0,
            )
        )
    instance = Instance(graph=graph, agents=tuple(agents), epsilon=1)
    violations = validate(instance)
    if violations:  # generator bug, not user error
        raise ValidationError(violations)
    return instance


# ---------------------------------------------------------------------------
# instance file format
#
#   hfmapf-instance v1
#   [graph]
#   node_count = <int>
#   <i> <j> <travel_cost> <travel_time> <energy_cost> <recharge> <gen 0|1>
#   [agents]
#   <start> <goal> <battery_init> <battery_max> <fuel_init> <start_time>
#   [params]
#   epsilon = <int>
#
# Whitespace separated; '#' starts a comment; unknown sections or keys are
# rejected rather than ignored.


def save_instance(instance: Instance) -> str:
    lines = [FORMAT_HEADER, "[graph]", f"node_count = {instance.graph.node_count}"]
    for (i, j), a in instance.graph.edges.items():
        lines.append(
            f"{i} {j} {a.travel_cost!r} {a.travel_time} "
            f"{a.energy_cost!r} {a.recharge!r} {1 if a.gen_allowed else 0}"
        )
    lines.append("[agents]")
    for a in instance.agents:
        lines.append(
            f"{a.start} {a.goal} {a.battery_init!r} {a.battery_max!r} "
            f"{a.fuel_init!r} {a.start_time}"
        )
    lines.append("[params]")
    lines.append(f"epsilon = {instance.epsilon}")
    return "\n".join(lines) + "\n"


def _parse_int(tok: str, what: str, line_no: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"{what}: expected integer, got {tok!r}", line_no) from None


def _parse_float(tok: str, what: str, line_no: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"{what}: expected number, got {tok!r}", line_no) from None


def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_no, line


def load_instance(text: str) -> Instance:
    """Parse and validate instance text; ``load_instance(save_instance(x))``
    reproduces ``x`` exactly."""
    it = _content_lines(text)
    try:
        line_no, line = next(it)
    except StopIteration:
        raise ParseError("empty file") from None
    if line != FORMAT_HEADER:
        raise ParseError(f"expected header {FORMAT_HEADER!r}, got {line!r}", line_no)

    section = None
    seen: set[str] = set()
    node_count: int | None = None
    edges: dict[tuple[int, int], EdgeAttr] = {}
    agents: list[AgentSpec] = []
    epsilon: int | None = None

    for line_no, line in it:
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("malformed section header", line_no)
            section = line[1:-1]
            if section not in ("graph", "agents", "params"):
                raise ParseError(f"unknown section [{section}]", line_no)
            if section in seen:
                raise ParseError(f"duplicate section [{section}]", line_no)
            seen.add(section)
            continue
        if section == "graph":
            toks = line.split()
            if toks[0] == "node_count":
                if len(toks) != 3 or toks[1] != "=":
                    raise ParseError("expected 'node_count = <int>'", line_no)
                if node_count is not None:
                    raise ParseError("duplicate node_count", line_no)
                node_count = _parse_int(toks[2], "node_count", line_no)
                continue
            if "=" in line:
                raise ParseError(f"unknown graph field {toks[0]!r}", line_no)
            if len(toks) != 7:
                raise ParseError(
                    f"edge line needs 7 fields (i j D T C Z G), got {len(toks)}",
                    line_no,
                )
            i = _parse_int(toks[0], "edge tail", line_no)
            j = _parse_int(toks[1], "edge head", line_no)
            if (i, j) in edges:
                raise ParseError(f"duplicate edge ({i},{j})", line_no)
            gen = _parse_int(toks[6], "gen flag", line_no)
            if gen not in (0, 1):
                raise ParseError("gen flag must be 0 or 1", line_no)
            edges[(i, j)] = EdgeAttr(
                travel_cost=_parse_float(toks[2], "travel_cost", line_no),
                travel_time=_parse_int(toks[3], "travel_time", line_no),
                energy_cost=_parse_float(toks[4], "energy_cost", line_no),
                recharge=_parse_float(toks[5], "recharge", line_no),
                gen_allowed=bool(gen),
            )
        elif section == "agents":
            toks = line.split()
            if len(toks) != 6:
                raise ParseError(
                    "agent line needs 6 fields (start goal B0 Bmax Q0 T0), "
                    f"got {len(toks)}",
                    line_no,
                )
            agents.append(
                AgentSpec(
                    start=_parse_int(toks[0], "start", line_no),
                    goal=_parse_int(toks[1], "goal", line_no),
                    battery_init=_parse_float(toks[2], "battery_init", line_no),
                    battery_max=_parse_float(toks[3], "battery_max", line_no),
                    fuel_init=_parse_float(toks[4], "fuel_init", line_no),
                    start_time=_parse_int(toks[5], "start_time", line_no),
                )
            )
        elif section == "params":
            toks = line.split()
            if len(toks) != 3 or toks[1] != "=":
                raise ParseError("expected '<name> = <value>'", line_no)
            if toks[0] != "epsilon":
                raise ParseError(f"unknown parameter {toks[0]!r}", line_no)
            if epsilon is not None:
                raise ParseError("duplicate epsilon", line_no)
            epsilon = _parse_int(toks[2], "epsilon", line_no)
        else:
            raise ParseError("content before first section", line_no)

    for name in ("graph", "agents", "params"):
        if name not in seen:
            raise ParseError(f"missing section [{name}]")
    if node_count is None:
        raise ParseError("missing node_count in [graph]")
    if epsilon is None:
        raise ParseError("missing epsilon in [params]")
    for (i, j) in edges:
        if not (0 <= i < node_count and 0 <= j < node_count):
            raise ParseError(f"edge ({i},{j}) endpoint out of range")
        if i == j:
            raise ParseError(f"self-loop ({i},{i}) not allowed")

    instance = Instance(
        graph=Graph(node_count, edges), agents=tuple(agents), epsilon=epsilon
    )
    violations = validate(instance)
    if violations:
        raise ValidationError(violations)
    return instance
