#!/usr/bin/env python3
"""Compare the compiled search kernel against the pure-Python fallback.

Generates non-trivial instance sets per size class, solves each set with both
kernels through the full planner stack, and reports wall / subproblem timing
plus the speedup.  Results also double as a determinism check: both engines
must return identical costs and tree sizes.

Usage: python benchmarks/bench_engines.py [--quick] [--full]
"""
from __future__ import annotations

import argparse
import statistics
import sys
import tempfile
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from hfmapf.cli import main as cli_main, run_bench  # noqa: E402
from hfmapf.labeling import available_engines  # noqa: E402


def generate_class(rows, cols, agents, count, seed, workdir) -> list[str]:
    out = workdir / f"{rows}x{cols}_a{agents}"
    code = cli_main(
        [
            "generate",
            "--rows", str(rows),
            "--cols", str(cols),
            "--agents", str(agents),
            "--count", str(count),
            "--seed", str(seed),
            "--nontrivial",
            "--out", str(out),
        ]
    )
    if code != 0:
        raise RuntimeError("instance generation failed")
    return sorted(str(p) for p in out.glob("*.txt"))


def bench_class(paths: list[str]) -> dict:
    results = {}
    for engine in available_engines():
        t0 = time.perf_counter()
        rows_out, _ = run_bench(paths, budget_s=120.0, engine=engine, jobs=1)
        elapsed = time.perf_counter() - t0
        results[engine] = {
            "elapsed": elapsed,
            "sub_time": sum(float(r["subproblem_time_s"]) for r in rows_out),
            "median_wall": statistics.median(
                float(r["wall_time_s"]) for r in rows_out
            ),
            "costs": [r["total_cost"] for r in rows_out],
            "ct_nodes": [r["ct_nodes_expanded"] for r in rows_out],
        }
    return results


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="10 instances/class")
    parser.add_argument("--full", action="store_true", help="include 15x15/10")
    args = parser.parse_args()
    engines = available_engines()
    if "compiled" not in engines:
        print("compiled kernel not built; benchmarking the fallback only")
    count = 10 if args.quick else 25
    classes = [(5, 5, 4, 61), (10, 10, 5, 62)]
    if args.full:
        classes.append((15, 15, 10, 63))

    with tempfile.TemporaryDirectory() as tmp:
        sets = {
            (rows, cols, agents): generate_class(
                rows, cols, agents, count, seed, Path(tmp)
            )
            for rows, cols, agents, seed in classes
        }
        header = (
            f"{'class':>12} {'engine':>9} {'total_s':>9} {'sub_s':>9} "
            f"{'median_wall_s':>14}"
        )
        print(header)
        print("-" * len(header))
        for (rows, cols, agents), paths in sets.items():
            label = f"{rows}x{cols}/{agents}ag"
            results = bench_class(paths)
            for engine in sorted(results):
                r = results[engine]
                print(
                    f"{label:>12} {engine:>9} {r['elapsed']:>9.3f} "
                    f"{r['sub_time']:>9.3f} {r['median_wall']:>14.5f}"
                )
            if len(results) == 2:
                a, b = results["python"], results["compiled"]
                if a["costs"] != b["costs"] or a["ct_nodes"] != b["ct_nodes"]:
                    print(f"{label}: ENGINES DISAGREE", file=sys.stderr)
                    return 1
                speedup = (
                    a["sub_time"] / b["sub_time"] if b["sub_time"] > 0 else float("inf")
                )
                print(f"{label:>12} subproblem speedup: x{speedup:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
