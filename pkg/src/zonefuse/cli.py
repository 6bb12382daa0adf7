"""Command-line entry points.

Subcommands:

* ``run --config cfg.json``: the full pipeline.
* ``denoise --edges e.txt --values v.csv --lambda X``: direct solver
  access on an explicit zone graph.
* ``chain-solve --targets a,b,c --lambda X [--weights ...]``: the 1-D
  fused-lasso debug solver.
* ``decompose --edges e.txt``: print the trail decomposition.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .errors import ZonefuseError
from .fused1d import ChainProblem, solve_chain
from .gfl import AdmmConfig, admm_solve, build_problem, solver_diagnostics_text
from .graph import ZoneGraph, decompose_trails, dump_trails
from .pipeline import load_config, run_pipeline


def _read_edge_pairs(path: str) -> list[tuple[str, str]]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.replace(",", " ").split()]
            if len(parts) != 2:
                raise ZonefuseError(f"bad edge line: {line!r}")
            pairs.append((parts[0], parts[1]))
    return pairs


def _read_values(path: str) -> list[tuple[str, float]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not {"zone_id", "value"}.issubset(reader.fieldnames or ()):
            raise ZonefuseError("values file needs columns zone_id,value")
        return [(row["zone_id"], float(row["value"])) for row in reader]


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run_pipeline(cfg)
    print(json.dumps({"output_dir": cfg.output_dir,
                      "outputs": manifest["outputs"]}, indent=2))
    return 0


def _cmd_denoise(args) -> int:
    graph = ZoneGraph.from_edges(_read_edge_pairs(args.edges))
    decomposition = decompose_trails(graph)
    problem = build_problem(graph, decomposition, _read_values(args.values))
    solution = admm_solve(problem, args.lam, AdmmConfig(),
                          record_objective=args.verbose)
    out = sys.stdout if args.output is None else open(
        args.output, "w", encoding="utf-8")
    try:
        out.write("zone_id,denoised\n")
        for zone, val in zip(graph.nodes, solution.x):
            out.write(f"{zone},{val:.6f}\n")
    finally:
        if args.output is not None:
            out.close()
    if args.verbose:
        sys.stderr.write(solver_diagnostics_text(solution))
    return 0


def _cmd_chain_solve(args) -> int:
    targets = np.array([float(v) for v in args.targets.split(",")])
    if args.weights:
        weights = np.array([float(v) for v in args.weights.split(",")])
    else:
        weights = np.ones_like(targets)
    z = solve_chain(ChainProblem(targets=targets, weights=weights,
                                 lam=args.lam))
    print(",".join(f"{v:.12g}" for v in z))
    return 0


def _cmd_decompose(args) -> int:
    graph = ZoneGraph.from_edges(_read_edge_pairs(args.edges))
    decomposition = decompose_trails(graph)
    sys.stdout.write(dump_trails(graph, decomposition))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zonefuse",
        description="Zone-level ride metrics with graph-fused-lasso denoising")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("denoise", help="denoise zone values on an edge list")
    p.add_argument("--edges", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--verbose", action="store_true",
                   help="print per-iteration diagnostics to stderr")
    p.set_defaults(fn=_cmd_denoise)

    p = sub.add_parser("chain-solve", help="solve one 1-D fused lasso chain")
    p.add_argument("--targets", required=True,
                   help="comma-separated target values")
    p.add_argument("--weights", default=None,
                   help="comma-separated positive weights (default all 1)")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(fn=_cmd_chain_solve)

    p = sub.add_parser("decompose", help="print the trail decomposition")
    p.add_argument("--edges", required=True)
    p.set_defaults(fn=_cmd_decompose)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ZonefuseError, OSError, json.JSONDecodeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
