"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data/configuration error,
3 partial failure (some comparison runs failed).
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
from pathlib import Path

from srurgs.benchmark import generate_suite, load_suite, write_suite
from srurgs.data import load_dataset
from srurgs.enumeration import arrangements, node_counts, total_equations
from srurgs.errors import SRURGSError
from srurgs.expression import build_expression, simplify, to_string
from srurgs.gp import GPConfig, gp_search
from srurgs.harness import (
    QUARTIC_TREE,
    quartic_dataset,
    quartic_heatmap,
    report_from_stores,
    run_comparison,
    write_grid,
)
from srurgs.search import parallel_search, random_equation_index
from srurgs.space import SearchSpaceConfig, parameter_names, parse_function_list
from srurgs.store import ResultStore, top_results

STORE_DIR_ENV = "SRURGS_STORE_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_space_args(p, need_variables: bool):
    p.add_argument("--binary", default="+,-,/,*,^", help="arity-2 functions, e.g. '+,-,/,*,^' (default: %(default)s)")
    p.add_argument("--unary", default="", help="arity-1 functions, e.g. 'exp,sin,sinh' (default: none)")
    if need_variables:
        p.add_argument("--variables", default="x", help="comma separated variable names (default: %(default)s)")
    p.add_argument("--params", type=int, default=2, help="number of fitting parameters (default: %(default)s)")
    p.add_argument("--N", type=int, default=200, help="number of trees in the space (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0)


def _space(args, variables) -> SearchSpaceConfig:
    return SearchSpaceConfig(
        binary_funcs=parse_function_list(args.binary),
        variables=tuple(variables),
        parameters=parameter_names(args.params),
        unary_funcs=parse_function_list(args.unary),
        N=args.N,
    )


def _store_path(args, default_name: str) -> Path:
    if args.store:
        return Path(args.store)
    return Path(os.environ.get(STORE_DIR_ENV, ".")) / default_name


def _print_top(store: ResultStore, count: int):
    for rank, rec in enumerate(top_results(store, count), start=1):
        params = ", ".join(repr(v) for v in rec.params)
        print(f"{rank}\t{rec.r2!r}\t{rec.key}\t[{params}]\tseen={rec.times_seen}")


def cmd_count(args) -> int:
    space = _space(args, args.variables.split(","))
    print("i\tl\tk\tj\tG\tA\tB")
    for i in range(space.N):
        l, k, j = node_counts(i, space.mode)
        G, A, B = arrangements(i, space)
        print(f"{i}\t{l}\t{k}\t{j}\t{G}\t{A}\t{B}")
    print(f"M\t{total_equations(space)}")
    return EXIT_OK


def cmd_sample(args) -> int:
    space = _space(args, args.variables.split(","))
    rng = random.Random(args.seed)
    for _ in range(args.count):
        idx = random_equation_index(space, rng)
        expr = build_expression(idx, space)
        print(f"{idx.i}\t{idx.q}\t{idx.r}\t{idx.s}\t{to_string(expr)}\t{to_string(simplify(expr))}")
    return EXIT_OK


def _open_run_store(args, space, default_name) -> ResultStore:
    path = _store_path(args, default_name)
    if not args.resume and path.exists():
        path.unlink()
    path.parent.mkdir(parents=True, exist_ok=True)
    return ResultStore.open(path, space.config_hash())


def cmd_search(args) -> int:
    data = load_dataset(args.data)
    space = _space(args, data.names)
    store = _open_run_store(args, space, "srurgs.store")
    store.metadata["seed"] = args.seed
    parallel_search(space, data, args.iterations, args.seed, args.workers, store)
    store.compact()
    _print_top(store, args.top)
    return EXIT_OK


def cmd_gp(args) -> int:
    data = load_dataset(args.data)
    space = _space(args, data.names)
    cfg = GPConfig(
        population_size=args.population,
        tournament_size=args.tournament,
        p_crossover=args.p_crossover,
        p_mutation=args.p_mutation,
        init_max_height=args.init_height,
        mutation_max_height=args.mutation_height,
        unique_target=args.unique,
    )
    store = _open_run_store(args, space, "gp.store")
    store.metadata["seed"] = args.seed
    gp_search(space, data, cfg, args.seed, store)
    store.compact()
    _print_top(store, args.top)
    return EXIT_OK


def cmd_benchmark_gen(args) -> int:
    problems = generate_suite(args.seed, args.simple, args.extended)
    path = write_suite(problems, args.out, args.seed)
    print(f"wrote {len(problems)} problems to {path.parent}")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    if args.data:
        data = load_dataset(args.data)
        variables = data.names
    else:
        data = quartic_dataset()
        variables = ("x",)
    args.N = max(args.N, args.tree + 1)
    space = _space(args, variables)
    grid = quartic_heatmap(space, data, args.tree)
    write_grid(grid, args.out)
    print(f"{grid.shape[0]}x{grid.shape[1]} grid, best R^2 {float(grid.max())!r}, written to {args.out}")
    return EXIT_OK


def _print_summary(report):
    for cohort, data in report.summary.items():
        t = data["paired_t"]
        tt = f"t={t['t']!r} p={t['p']!r}" if t else "t-test n/a"
        print(
            f"{cohort}\tpairs={data['pairs']}\tsrurgs median={data['srurgs']['median']!r} mean={data['srurgs']['mean']!r}"
            f"\tgp median={data['gp']['median']!r} mean={data['gp']['mean']!r}\t{tt}"
        )
    for failure in report.failures:
        print(f"FAILED\t{failure}", file=sys.stderr)


def cmd_compare(args) -> int:
    problems = load_suite(args.suite)
    if args.problems:
        wanted = {int(v) for v in args.problems.split(",")}
        problems = [p for p in problems if p.problem_id in wanted]
    report = run_comparison(problems, args.runs, args.budget, args.seed, args.out, workers=args.workers)
    _print_summary(report)
    return EXIT_PARTIAL if report.failures else EXIT_OK


def cmd_report(args) -> int:
    problems = load_suite(args.suite)
    report = report_from_stores(problems, args.out, args.runs)
    _print_summary(report)
    return EXIT_PARTIAL if report.failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srurgs", description="Symbolic regression by uniform random global search")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="size of the equation space")
    _add_space_args(p, need_variables=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("sample", help="print uniformly drawn random equations")
    _add_space_args(p, need_variables=True)
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_sample)

    for name, func, default_name in (("search", cmd_search, "srurgs.store"), ("gp", cmd_gp, "gp.store")):
        p = sub.add_parser(name, help="random search" if name == "search" else "genetic programming baseline")
        p.add_argument("--data", required=True, help="CSV file, last column is the target")
        _add_space_args(p, need_variables=False)
        p.add_argument("--store", help=f"result store file (default: ${STORE_DIR_ENV}/{default_name})")
        p.add_argument("--resume", action="store_true", help="add to an existing store instead of replacing it")
        p.add_argument("--top", type=int, default=10)
        if name == "search":
            p.add_argument("--iterations", type=int, default=1000)
            p.add_argument("--workers", type=int, default=1)
        else:
            p.add_argument("--population", type=int, default=100)
            p.add_argument("--tournament", type=int, default=5)
            p.add_argument("--p-crossover", type=float, default=0.7)
            p.add_argument("--p-mutation", type=float, default=0.3)
            p.add_argument("--init-height", type=int, default=4)
            p.add_argument("--mutation-height", type=int, default=2)
            p.add_argument("--unique", type=int, default=1000)
        p.set_defaults(func=func)

    p = sub.add_parser("benchmark-gen", help="generate a random benchmark suite")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--simple", type=int, default=20)
    p.add_argument("--extended", type=int, default=80)
    p.set_defaults(func=cmd_benchmark_gen)

    p = sub.add_parser("heatmap", help="R^2 grid over all configurations of one tree")
    p.add_argument("--data", help="CSV file (default: built-in quartic polynomial)")
    _add_space_args(p, need_variables=False)
    p.add_argument("--tree", type=int, default=QUARTIC_TREE)
    p.add_argument("--out", default="heatmap.csv")
    p.set_defaults(func=cmd_heatmap, N=0)

    for name, func in (("compare", cmd_compare), ("report", cmd_report)):
        p = sub.add_parser(name, help="run the comparison" if name == "compare" else "rebuild the report from stores")
        p.add_argument("--suite", required=True, help="benchmark suite directory")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--runs", type=int, default=10)
        p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; stores already fix every seed" if name == "report" else None)
        if name == "compare":
            p.add_argument("--budget", type=int, default=1000, help="unique equations per run")
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--problems", help="comma separated problem ids (default: all)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SRURGSError as exc:
        print(f"srurgs: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"srurgs: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
