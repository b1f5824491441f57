"""Shared builders for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from hfmapf import AgentSpec, EdgeAttr, Graph, GridSpec, Instance, generate_instance
from hfmapf.labeling import ConstraintSet


def bidirected(node_count: int, pairs: dict[tuple[int, int], EdgeAttr]) -> Graph:
    """Graph with identical attributes in both directions of each pair."""
    edges = {}
    for (i, j), attr in pairs.items():
        edges[(i, j)] = attr
        edges[(j, i)] = attr
    return Graph(node_count, edges)


def free_attr(cost: float = 1.0) -> EdgeAttr:
    """No energy drain, no recharge, generator allowed: pure routing."""
    return EdgeAttr(cost, 1, 0.0, 0.0, True)


def line_instance(n: int = 2, cost: float = 1.0, **agent_kw) -> Instance:
    """Path graph 0-1-...-(n-1) with one agent going end to end."""
    pairs = {(i, i + 1): free_attr(cost) for i in range(n - 1)}
    defaults = dict(
        start=0, goal=n - 1, battery_init=10.0, battery_max=12.0, fuel_init=5.0
    )
    defaults.update(agent_kw)
    return Instance(
        graph=bidirected(n, pairs), agents=(AgentSpec(**defaults),), epsilon=1
    )


def random_instance(
    rng: np.random.Generator, rows: int, cols: int, agents: int, **spec_kw
) -> Instance:
    spec = GridSpec(
        rows=rows,
        cols=cols,
        noise_density=spec_kw.pop("noise_density", float(rng.uniform(0.0, 0.5))),
        seed=int(rng.integers(0, 2**63)),
        **spec_kw,
    )
    return generate_instance(spec, agents)


def random_constraints(
    rng: np.random.Generator, instance: Instance, max_entries: int = 6,
    max_time: int = 10,
) -> ConstraintSet:
    n = instance.graph.node_count
    edges = list(instance.graph.edges)
    vcs, ecs = set(), set()
    for _ in range(int(rng.integers(0, max_entries + 1))):
        if rng.random() < 0.6:
            vcs.add((int(rng.integers(0, n)), int(rng.integers(0, max_time + 1))))
        else:
            ecs.add(
                (
                    edges[int(rng.integers(0, len(edges)))],
                    int(rng.integers(0, max_time + 1)),
                )
            )
    return ConstraintSet(frozenset(vcs), frozenset(ecs))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
