"""Conflict-free routing for fleets of series-hybrid UAVs whose generators
are banned inside noise-restricted zones.

High level: conflict-based search (`hfmapf.cbs`) over per-agent plans from a
resource-constrained temporal labeling search (`hfmapf.labeling`), with an
exhaustive oracle (`hfmapf.oracle`), a mixed-integer model exporter
(`hfmapf.milp`), and a benchmarking CLI (`hfmapf.cli`).
"""
from .labeling import (
    ConstraintSet,
    Heuristic,
    Label,
    Plan,
    SearchResult,
    SearchStats,
    SolveLimits,
    available_engines,
    compute_heuristic,
    default_engine,
    dominates,
    eff,
    extend,
    replay_plan,
    solve_nrhfsp,
    violates,
)
from .model import (
    AgentSpec,
    EdgeAttr,
    Graph,
    GridSpec,
    Instance,
    ParseError,
    ValidationError,
    build_grid,
    generate_instance,
    load_instance,
    save_instance,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "ConstraintSet",
    "EdgeAttr",
    "Graph",
    "GridSpec",
    "Heuristic",
    "Instance",
    "Label",
    "ParseError",
    "Plan",
    "SearchResult",
    "SearchStats",
    "SolveLimits",
    "ValidationError",
    "available_engines",
    "build_grid",
    "compute_heuristic",
    "default_engine",
    "dominates",
    "eff",
    "extend",
    "generate_instance",
    "load_instance",
    "replay_plan",
    "save_instance",
    "solve_nrhfsp",
    "validate",
    "violates",
    "__version__",
]
