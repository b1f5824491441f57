#!/usr/bin/env python3
"""Solve the stored model-export fixtures with an external MILP solver.

One-time step whose outputs are committed: for every instance under
``tests/fixtures/milp/*.txt`` this script exports the LP file, re-reads it
with a generic LP-format parser (no knowledge of the exporter's internals
beyond the variable naming scheme), hands it to HiGHS via
``scipy.optimize.milp``, reconstructs the per-agent paths from the solved
binaries, and records both the solver objective and the path-recomputed cost
in ``objectives.json``.  The test suite compares those numbers against the
planner; re-run after any change to the model export.

Usage: python scripts/solve_milp_fixtures.py [--write-golden]
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp as scipy_milp

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from hfmapf import load_instance  # noqa: E402
from hfmapf.milp import export_milp  # noqa: E402

FIXTURE_DIR = REPO / "tests" / "fixtures" / "milp"


def parse_terms(tokens: list[str]) -> list[tuple[float, str]]:
    terms = []
    sign = 1.0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "+":
            sign = 1.0
            i += 1
        elif tok == "-":
            sign = -1.0
            i += 1
        else:
            coeff = sign * float(tok)
            var = tokens[i + 1]
            terms.append((coeff, var))
            sign = 1.0
            i += 2
    return terms


def parse_lp(text: str):
    """Generic reader for the LP text format: objective, rows, bounds,
    binaries."""
    objective: list[tuple[float, str]] = []
    rows: list[tuple[str, list[tuple[float, str]], str, float]] = []
    bounds: dict[str, tuple[float, float]] = {}
    binaries: set[str] = set()
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary"):
            section = "bin"
            continue
        if low in ("generals", "general"):
            section = "gen"
            continue
        if low == "end":
            break
        if section == "obj":
            body = line.split(":", 1)[1] if ":" in line else line
            objective += parse_terms(body.split())
        elif section == "rows":
            name, body = line.split(":", 1)
            tokens = body.split()
            sense_idx = next(
                i for i, t in enumerate(tokens) if t in ("<=", ">=", "=")
            )
            rows.append(
                (
                    name.strip(),
                    parse_terms(tokens[:sense_idx]),
                    tokens[sense_idx],
                    float(tokens[sense_idx + 1]),
                )
            )
        elif section == "bounds":
            tokens = line.split()
            if len(tokens) == 5 and tokens[1] == "<=" and tokens[3] == "<=":
                bounds[tokens[2]] = (float(tokens[0]), float(tokens[4]))
            elif len(tokens) == 3 and tokens[1] == ">=":
                bounds[tokens[0]] = (float(tokens[2]), np.inf)
            elif len(tokens) == 3 and tokens[1] == "<=":
                bounds[tokens[0]] = (0.0, float(tokens[2]))
            else:
                raise ValueError(f"unsupported bounds line: {line}")
        elif section == "bin":
            binaries.add(line)
    return objective, rows, bounds, binaries


def solve_lp_text(text: str):
    objective, rows, bound_map, binaries = parse_lp(text)
    var_order: dict[str, int] = {}

    def vid(name: str) -> int:
        if name not in var_order:
            var_order[name] = len(var_order)
        return var_order[name]

    for _, name in objective:
        vid(name)
    for _, terms, _, _ in rows:
        for _, name in terms:
            vid(name)
    for name in bound_map:
        vid(name)
    for name in binaries:
        vid(name)

    n = len(var_order)
    c = np.zeros(n)
    for coeff, name in objective:
        c[var_order[name]] += coeff
    data, ri, ci = [], [], []
    lb = np.empty(len(rows))
    ub = np.empty(len(rows))
    for r, (_, terms, sense, rhs) in enumerate(rows):
        for coeff, name in terms:
            data.append(coeff)
            ri.append(r)
            ci.append(var_order[name])
        if sense == "<=":
            lb[r], ub[r] = -np.inf, rhs
        elif sense == ">=":
            lb[r], ub[r] = rhs, np.inf
        else:
            lb[r], ub[r] = rhs, rhs
    a_mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    integrality = np.zeros(n)
    for name, (vlo, vhi) in bound_map.items():
        i = var_order[name]
        lo[i], hi[i] = vlo, vhi
    for name in binaries:
        i = var_order[name]
        lo[i], hi[i] = 0.0, 1.0
        integrality[i] = 1
    result = scipy_milp(
        c,
        constraints=LinearConstraint(a_mat, lb, ub),
        integrality=integrality,
        bounds=Bounds(lo, hi),
    )
    return result, var_order


def reconstruct_cost(instance, values, var_order) -> float:
    """Per-agent path following along x=1 edges, costed the same way the
    planner costs paths (edge by edge along the path, then agent by agent)."""
    total = 0.0
    for k, agent in enumerate(instance.agents):
        node = agent.start
        cost = 0.0
        seen = set()
        while node != agent.goal:
            if node in seen:
                raise RuntimeError(f"agent {k}: cycle in MILP path at {node}")
            seen.add(node)
            for j, attr in instance.graph.out_edges[node]:
                name = f"x_{k}_{node}_{j}"
                if name in var_order and values[var_order[name]] > 0.5:
                    cost += attr.travel_cost
                    node = j
                    break
            else:
                raise RuntimeError(f"agent {k}: path breaks at node {node}")
        total += cost
    return total


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument(
        "--write-golden",
        action="store_true",
        help="also refresh the stored golden LP export",
    )
    args = parser.parse_args()

    fixtures = sorted(FIXTURE_DIR.glob("*.txt"))
    if not fixtures:
        print(f"no fixture instances under {FIXTURE_DIR}", file=sys.stderr)
        return 1
    results = {}
    for path in fixtures:
        instance = load_instance(path.read_text())
        model = export_milp(instance)
        lp_text = model.to_lp()
        res, var_order = solve_lp_text(lp_text)
        if res.status != 0:
            results[path.name] = {"status": "infeasible_or_failed"}
            print(f"{path.name}: solver status {res.status} ({res.message})")
            continue
        recon = reconstruct_cost(instance, res.x, var_order)
        results[path.name] = {
            "status": "optimal",
            "objective": res.fun,
            "reconstructed_cost": recon,
            "solver": "scipy.optimize.milp (HiGHS)",
        }
        print(f"{path.name}: objective={res.fun!r} reconstructed={recon!r}")
    out = FIXTURE_DIR / "objectives.json"
    out.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    if args.write_golden and fixtures:
        golden_src = fixtures[0]
        model = export_milp(load_instance(golden_src.read_text()))
        (FIXTURE_DIR / "golden.lp").write_text(model.to_lp())
        (FIXTURE_DIR / "golden.lp.names").write_text(model.name_map_text())
        print(f"wrote golden LP from {golden_src.name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
