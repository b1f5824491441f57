"""Command line front end.

Subcommands: ``generate`` (random benchmark instances, optionally filtered to
those with a root-level conflict), ``solve`` (one instance, optional
verification), ``bench`` (a directory of instances to CSV), ``export-milp``
(model file plus name-map sidecar), and ``verify`` (feasibility, model
consistency, and desk-scale optimality checks).

Exit codes: 0 solved/success, 2 infeasible, 3 timeout, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import cbs, milp, oracle
from .labeling import SolveLimits
from .model import (
    GridSpec,
    Instance,
    ParseError,
    ValidationError,
    generate_instance,
    load_instance,
    save_instance,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3

BENCH_COLUMNS = [
    "instance",
    "nodes",
    "agents",
    "outcome",
    "total_cost",
    "ct_nodes_expanded",
    "ct_nodes_generated",
    "subproblem_calls",
    "subproblem_time_s",
    "wall_time_s",
]
BENCH_SPP_COLUMNS = [
    "spp_subproblem_calls",
    "spp_subproblem_time_s",
    "subproblem_time_median_s",
    "spp_subproblem_time_median_s",
]


def _candidate_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(master, index)).generate_state(1)[0])


def root_plans_conflict_free(instance: Instance, limits: SolveLimits) -> bool | None:
    """True/False for a deciding root; None when a root subproblem is
    infeasible or timed out (such instances make poor benchmarks)."""
    from .labeling import compute_heuristic, solve_nrhfsp

    plans = []
    heuristics: dict[int, object] = {}
    for k, agent in enumerate(instance.agents):
        h = heuristics.get(agent.goal)
        if h is None:
            h = compute_heuristic(instance.graph, agent.goal)
            heuristics[agent.goal] = h
        result = solve_nrhfsp(instance, k, None, limits, heuristic=h)
        if result.status != "found":
            return None
        plans.append(result.plan)
    return not cbs.detect_conflicts(plans, instance.epsilon)


def cmd_generate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    limits = SolveLimits(budget_s=args.timeout_s, horizon=args.horizon)
    written = 0
    candidate = 0
    discarded_trivial = 0
    discarded_degenerate = 0
    while written < args.count:
        if candidate >= args.max_attempts:
            print(
                f"error: quota {args.count} not met after {candidate} candidates",
                file=sys.stderr,
            )
            return EXIT_ERROR
        seed = _candidate_seed(args.seed, candidate)
        spec = GridSpec(
            rows=args.rows,
            cols=args.cols,
            noise_density=args.noise_density,
            seed=seed,
        )
        candidate += 1
        instance = generate_instance(spec, args.agents)
        if args.epsilon != 1:
            instance = Instance(instance.graph, instance.agents, args.epsilon)
        if args.nontrivial:
            root_free = root_plans_conflict_free(instance, limits)
            if root_free is None:
                discarded_degenerate += 1
                continue
            if root_free:
                discarded_trivial += 1
                continue
        name = f"inst_{args.rows}x{args.cols}_a{args.agents}_{written:03d}.txt"
        text = save_instance(instance)
        text += (
            f"# generated: rows={args.rows} cols={args.cols} agents={args.agents}"
            f" noise={args.noise_density} master_seed={args.seed}"
            f" candidate={candidate - 1}\n"
        )
        (out_dir / name).write_text(text)
        written += 1
    print(
        f"generated {written} instances in {out_dir} "
        f"(candidates: {candidate}, discarded root-trivial: {discarded_trivial}, "
        f"discarded degenerate-root: {discarded_degenerate})"
    )
    return EXIT_OK


def _load(path: str) -> Instance:
    return load_instance(Path(path).read_text())


def _verify_solution(instance: Instance, solution: cbs.Solution,
                     check_optimal: bool = True) -> list[str]:
    """All verification failures for a solution (empty list means verified)."""
    from .labeling import replay_plan

    problems: list[str] = []
    conflicts = cbs.detect_conflicts(solution.plans, instance.epsilon)
    if conflicts:
        problems.append(f"{len(conflicts)} conflicts remain (first: {conflicts[0]})")
    for k, plan in enumerate(solution.plans):
        try:
            rebuilt = replay_plan(
                instance.graph, instance.agents[k], plan.path, plan.gen_pattern
            )
        except ValueError as exc:
            problems.append(f"agent {k}: replay failed: {exc}")
            continue
        if (
            rebuilt.arrival_times != plan.arrival_times
            or abs(rebuilt.final_battery - plan.final_battery) > 1e-9
            or abs(rebuilt.final_fuel - plan.final_fuel) > 1e-9
            or abs(rebuilt.cost - plan.cost) > 1e-9
        ):
            problems.append(f"agent {k}: replay disagrees with stored plan")
    model = milp.export_milp(instance)
    report = milp.embed_solution(model, solution.plans)
    if not report.ok:
        rows = ", ".join(f"{v.row}[{v.tag}]" for v in report.violations[:5])
        problems.append(f"model rows violated: {rows}")
    if check_optimal:
        lim = oracle.OracleLimits()
        if (
            instance.graph.node_count <= lim.max_nodes
            and len(instance.agents) <= lim.max_agents
        ):
            joint = oracle.brute_force_joint(instance, lim)
            if joint is None:
                problems.append("oracle says infeasible but a solution exists")
            elif joint[1] != solution.total_cost:
                problems.append(
                    f"oracle optimum {joint[1]!r} != solution cost "
                    f"{solution.total_cost!r}"
                )
    return problems


def cmd_solve(args) -> int:
    instance = _load(args.instance)
    if args.epsilon is not None:
        instance = Instance(instance.graph, instance.agents, args.epsilon)
    limits = SolveLimits(
        budget_s=args.timeout_s, horizon=args.horizon, engine=args.engine
    )
    result = cbs.solve(instance, limits)
    if result.status == "solved":
        sol = result.solution
        print(
            f"solved cost={sol.total_cost!r} ct_nodes={result.stats.ct_nodes_expanded} "
            f"subproblems={result.stats.subproblem_calls} "
            f"wall={result.stats.wall_time:.3f}s"
        )
        if args.out:
            Path(args.out).write_text(cbs.solution_to_text(sol))
        if args.verify:
            problems = _verify_solution(instance, sol)
            if problems:
                for p in problems:
                    print(f"verify: {p}", file=sys.stderr)
                return EXIT_ERROR
            print("verify: ok")
        return EXIT_OK
    print(
        f"{result.status} ct_nodes={result.stats.ct_nodes_expanded} "
        f"wall={result.stats.wall_time:.3f}s"
    )
    return EXIT_INFEASIBLE if result.status == "infeasible" else EXIT_TIMEOUT


def _bench_one(path: str, budget_s: float, horizon, engine, compare_spp: bool) -> dict:
    row = {c: "" for c in BENCH_COLUMNS + (BENCH_SPP_COLUMNS if compare_spp else [])}
    row["instance"] = Path(path).stem
    try:
        instance = _load(path)
    except (ParseError, ValidationError, OSError) as exc:
        row["outcome"] = f"error: {exc}"
        return row
    row["nodes"] = instance.graph.node_count
    row["agents"] = len(instance.agents)
    limits = SolveLimits(budget_s=budget_s, horizon=horizon, engine=engine)
    result = cbs.solve(
        instance, limits, compare_spp=compare_spp, collect_call_times=compare_spp
    )
    stats = result.stats
    if result.status == "solved":
        row["outcome"] = (
            "root-trivial" if stats.ct_nodes_expanded == 1 else "solved"
        )
        row["total_cost"] = repr(result.solution.total_cost)
    else:
        row["outcome"] = result.status
    row["ct_nodes_expanded"] = stats.ct_nodes_expanded
    row["ct_nodes_generated"] = stats.ct_nodes_generated
    row["subproblem_calls"] = stats.subproblem_calls
    row["subproblem_time_s"] = f"{stats.subproblem_time:.6f}"
    row["wall_time_s"] = f"{stats.wall_time:.6f}"
    if compare_spp:
        row["spp_subproblem_calls"] = stats.spp_subproblem_calls
        row["spp_subproblem_time_s"] = f"{stats.spp_subproblem_time:.6f}"
        if stats.subproblem_times:
            row["subproblem_time_median_s"] = (
                f"{statistics.median(stats.subproblem_times):.9f}"
            )
        if stats.spp_subproblem_times:
            row["spp_subproblem_time_median_s"] = (
                f"{statistics.median(stats.spp_subproblem_times):.9f}"
            )
        row["_sub_times"] = list(stats.subproblem_times or ())
        row["_spp_times"] = list(stats.spp_subproblem_times or ())
    return row


def run_bench(
    paths: list[str],
    budget_s: float = 120.0,
    horizon: int | None = None,
    engine: str | None = None,
    compare_spp: bool = False,
    jobs: int = 1,
) -> tuple[list[dict], dict]:
    """Solve every instance file and return (rows, summary).  Rows keep the
    input order regardless of completion order."""
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(
                    _bench_one,
                    paths,
                    [budget_s] * len(paths),
                    [horizon] * len(paths),
                    [engine] * len(paths),
                    [compare_spp] * len(paths),
                )
            )
    else:
        rows = [
            _bench_one(p, budget_s, horizon, engine, compare_spp) for p in paths
        ]
    outcomes: dict[str, int] = {}
    for row in rows:
        key = row["outcome"].split(":")[0]
        outcomes[key] = outcomes.get(key, 0) + 1
    summary: dict = {"outcomes": outcomes}
    if compare_spp:
        sub = [t for row in rows for t in row.get("_sub_times", ())]
        spp = [t for row in rows for t in row.get("_spp_times", ())]
        if sub and spp:
            med_sub = statistics.median(sub)
            med_spp = statistics.median(spp)
            summary["median_subproblem_s"] = med_sub
            summary["median_spp_subproblem_s"] = med_spp
            summary["spp_speedup"] = med_sub / med_spp if med_spp > 0 else float("inf")
    for row in rows:
        row.pop("_sub_times", None)
        row.pop("_spp_times", None)
    return rows, summary


def cmd_bench(args) -> int:
    paths = sorted(str(p) for p in Path(args.instances).glob("*.txt"))
    columns = BENCH_COLUMNS + (BENCH_SPP_COLUMNS if args.compare_spp else [])
    rows, summary = run_bench(
        paths,
        budget_s=args.timeout_s,
        horizon=args.horizon,
        engine=args.engine,
        compare_spp=args.compare_spp,
        jobs=args.jobs,
    )
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    print("outcomes:", summary["outcomes"])
    if "spp_speedup" in summary:
        print(
            f"median subproblem {summary['median_subproblem_s']:.6f}s vs "
            f"relaxed {summary['median_spp_subproblem_s']:.6f}s "
            f"(speedup x{summary['spp_speedup']:.1f})"
        )
    return EXIT_OK


def cmd_export_milp(args) -> int:
    instance = _load(args.instance)
    config = milp.MilpConfig(big_m=args.big_m, epsilon=args.epsilon)
    model = milp.export_milp(instance, config)
    out = Path(args.out)
    out.write_text(model.to_lp())
    Path(str(out) + ".names").write_text(model.name_map_text())
    print(
        f"wrote {out} ({len(model.rows)} rows, {len(model.name_map)} variables, "
        f"big_m={model.big_m!r})"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    instance = _load(args.instance)
    limits = SolveLimits(
        budget_s=args.timeout_s, horizon=args.horizon, engine=args.engine
    )
    if args.solution:
        solution = cbs.solution_from_text(
            Path(args.solution).read_text(), instance
        )
    else:
        result = cbs.solve(instance, limits)
        if result.status != "solved":
            print(result.status)
            return (
                EXIT_INFEASIBLE
                if result.status == "infeasible"
                else EXIT_TIMEOUT
            )
        solution = result.solution
    problems = _verify_solution(instance, solution)
    if problems:
        for p in problems:
            print(f"verify: {p}", file=sys.stderr)
        return EXIT_ERROR
    print(f"verify: ok (cost={solution.total_cost!r})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hfmapf",
        description="Conflict-free routing for hybrid-fuel UAV fleets "
        "under noise restrictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write random grid instances")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--noise-density", type=float, default=0.25)
    p.add_argument("--epsilon", type=int, default=1)
    p.add_argument(
        "--nontrivial",
        action="store_true",
        help="keep only instances whose independent root plans conflict",
    )
    p.add_argument("--max-attempts", type=int, default=100000)
    p.add_argument("--timeout-s", type=float, default=120.0)
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("instance")
    p.add_argument("--timeout-s", type=float, default=120.0)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--engine", default=None)
    p.add_argument("--epsilon", type=int, default=None)
    p.add_argument("-o", "--out", default=None, help="solution file to write")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="solve a directory of instances to CSV")
    p.add_argument("instances", help="directory of instance .txt files")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--timeout-s", type=float, default=120.0)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--engine", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument(
        "--compare-spp",
        action="store_true",
        help="also time each subproblem with resource rules relaxed",
    )
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-milp", help="write the model file for an instance")
    p.add_argument("instance")
    p.add_argument("--out", required=True)
    p.add_argument("--big-m", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_export_milp)

    p = sub.add_parser("verify", help="check a solution (or solve then check)")
    p.add_argument("instance")
    p.add_argument("--solution", default=None)
    p.add_argument("--timeout-s", type=float, default=120.0)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--engine", default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, milp.ExportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
