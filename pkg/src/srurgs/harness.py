"""Experiment orchestration: the quartic R^2 slice and the SRURGS vs GP comparison."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from srurgs.data import Dataset
from srurgs.enumeration import arrangements, node_counts
from srurgs.errors import ConfigurationError, FitFailed, StoreError
from srurgs.expression import EquationIndex, build_expression, check_space_compatible, simplify, to_string
from srurgs.fitting import clip_r2, fit_constants
from srurgs.gp import GPConfig, gp_search
from srurgs.search import derive_seeds, urgs_search
from srurgs.space import EXTENDED_BINARY, SearchSpaceConfig
from srurgs.stats import five_number_summary, histogram, paired_t_test
from srurgs.store import ResultStore

log = logging.getLogger(__name__)

ALGORITHMS = ("srurgs", "gp")
# Balanced four-leaf tree B(B(L,L),B(L,L)): 3 binary slots, 4 terminal slots.
QUARTIC_TREE = 4


def quartic_dataset(n_points: int = 20, low: float = -1.0, high: float = 1.0) -> Dataset:
    """y = x^4 + x^3 + x^2 + x sampled on an even grid."""
    x = np.linspace(low, high, n_points)
    return Dataset(("x",), x, x**4 + x**3 + x**2 + x)


def quartic_space(N: int = QUARTIC_TREE + 1, n_params: int = 2) -> SearchSpaceConfig:
    return SearchSpaceConfig.create(EXTENDED_BINARY, ["x"], n_params, N=N)


def quartic_heatmap(space: SearchSpaceConfig, data: Dataset, tree_index: int = QUARTIC_TREE) -> np.ndarray:
    """R^2 of every (binary-function, terminal) configuration of one tree.

    Rows are binary configurations ``r``, columns terminal configurations
    ``s``. Invalid and negative scores are reported as 0.
    """
    if space.mode != "binary" or space.f:
        raise ConfigurationError("the heatmap slice needs a binary-only space")
    if not 0 <= tree_index < space.N:
        raise ConfigurationError(f"tree {tree_index} lies outside the space (N={space.N})")
    check_space_compatible(space, data)
    if node_counts(tree_index, "binary").l:
        raise ConfigurationError("tree has unary slots")
    _, A, B = arrangements(tree_index, space)
    grid = np.zeros((A, B))
    cache: dict[str, float] = {}
    for r in range(A):
        for s in range(B):
            expr = simplify(build_expression(EquationIndex(tree_index, 0, r, s), space))
            key = to_string(expr)
            if key not in cache:
                try:
                    cache[key] = clip_r2(fit_constants(expr, data).r2)
                except FitFailed:
                    cache[key] = 0.0
            grid[r, s] = cache[key]
    return grid


def write_grid(grid: np.ndarray, path) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["r"] + [f"s{s}" for s in range(grid.shape[1])])
        for r, row in enumerate(grid):
            writer.writerow([r] + [repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# comparison protocol


@dataclass
class RunResult:
    problem_id: int
    variant: str
    run: int
    algorithm: str
    best_r2: float
    unique: int


@dataclass
class ExperimentReport:
    runs: list[RunResult]
    summary: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def values(self, algorithm: str, variant: str | None = None) -> list[float]:
        ordered = sorted(self.runs, key=lambda r: (r.problem_id, r.run))
        return [r.best_r2 for r in ordered if r.algorithm == algorithm and (variant is None or r.variant == variant)]

    def to_dict(self) -> dict:
        return {
            "runs": [r.__dict__ for r in sorted(self.runs, key=_run_key)],
            "summary": self.summary,
            "failures": self.failures,
        }


def _run_key(r: RunResult):
    return (r.problem_id, r.run, ALGORITHMS.index(r.algorithm))


def _cohort_summary(pairs: list[tuple[float, float]]) -> dict:
    out: dict = {"pairs": len(pairs)}
    for k, algorithm in enumerate(ALGORITHMS):
        vals = [p[k] for p in pairs]
        counts, edges = histogram(vals)
        out[algorithm] = {
            "median": float(np.median(vals)),
            "mean": float(np.mean(vals)),
            "histogram": {"counts": counts, "edges": edges},
            "boxplot": five_number_summary(vals),
        }
    if len(pairs) >= 2:
        t, p = paired_t_test([a for a, _ in pairs], [b for _, b in pairs])
        out["paired_t"] = {"t": t, "p": p}
    else:
        out["paired_t"] = None
    return out


def build_report(runs: list[RunResult], failures: list[str] | None = None) -> ExperimentReport:
    """Per-variant medians, means, histograms, box summaries and paired t-tests.

    Pairs are (problem, run) with both algorithms present.
    """
    by_slot: dict = {}
    for r in runs:
        by_slot.setdefault((r.variant, r.problem_id, r.run), {})[r.algorithm] = r.best_r2
    cohorts: dict[str, list] = {}
    for (variant, _, _), vals in sorted(by_slot.items()):
        if all(a in vals for a in ALGORITHMS):
            pair = tuple(vals[a] for a in ALGORITHMS)
            cohorts.setdefault(variant, []).append(pair)
            cohorts.setdefault("all", []).append(pair)
    summary = {name: _cohort_summary(pairs) for name, pairs in sorted(cohorts.items())}
    return ExperimentReport(sorted(runs, key=_run_key), summary, list(failures or []))


def _store_path(directory: Path, algorithm: str, problem_id: int, run: int) -> Path:
    return directory / f"{algorithm}_p{problem_id}_r{run}.store"


def _execute(job) -> tuple[ResultStore | None, str | None]:
    """Run one (problem, run, algorithm) job; returns (store, None) or (None, error)."""
    problem, run, algorithm, seed, budget, gp_cfg, path = job
    store = ResultStore(metadata={"seed": seed, "algorithm": algorithm, "complete": False})
    try:
        if algorithm == "srurgs":
            urgs_search(problem.space, problem.data, budget * 100, seed, store, max_unique=budget)
        else:
            cfg = GPConfig(**{**gp_cfg.__dict__, "unique_target": budget})
            gp_search(problem.space, problem.data, cfg, seed, store)
        store.metadata["complete"] = True
        if path is not None:
            store.compact(path)
            store.close()
    except (ConfigurationError, StoreError, OSError) as exc:
        return None, str(exc)
    return store, None


def _result_from_store(store: ResultStore, problem, run: int, algorithm: str) -> RunResult:
    return RunResult(problem.problem_id, problem.variant, run, algorithm, clip_r2(store.best_r2()), len(store))


def run_comparison(
    problems,
    runs_per_algorithm: int = 10,
    budget: int = 1000,
    seed: int = 0,
    out_dir=None,
    gp_cfg: GPConfig | None = None,
    workers: int = 1,
) -> ExperimentReport:
    """Solve every problem ``runs_per_algorithm`` times with each algorithm.

    Both algorithms stop after ``budget`` unique equations. With ``out_dir``
    each run's store is written to ``out_dir/stores`` and completed stores
    are reused on a rerun; unreadable stores are logged and recomputed, and
    runs that fail are listed in ``report.failures``.
    """
    gp_cfg = gp_cfg or GPConfig()
    store_dir = Path(out_dir) / "stores" if out_dir is not None else None
    if store_dir is not None:
        store_dir.mkdir(parents=True, exist_ok=True)
    seeds = iter(derive_seeds(seed, len(problems) * runs_per_algorithm * len(ALGORITHMS)))
    jobs = []
    results: list[RunResult] = []
    failures: list[str] = []
    for problem in problems:
        for run in range(runs_per_algorithm):
            for algorithm in ALGORITHMS:
                job_seed = next(seeds)
                path = _store_path(store_dir, algorithm, problem.problem_id, run) if store_dir else None
                if path is not None and path.exists():
                    try:
                        store = ResultStore.load(path)
                        if store.metadata.get("complete") and store.metadata.get("seed") == job_seed:
                            results.append(_result_from_store(store, problem, run, algorithm))
                            continue
                    except StoreError as exc:
                        log.warning("recomputing unreadable store %s: %s", path, exc)
                jobs.append((problem, run, algorithm, job_seed, budget, gp_cfg, path))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute, jobs))
    else:
        outcomes = [_execute(job) for job in jobs]
    for job, (store, error) in zip(jobs, outcomes):
        problem, run, algorithm = job[0], job[1], job[2]
        if error is not None:
            failures.append(f"problem {problem.problem_id} run {run} {algorithm}: {error}")
            log.error(failures[-1])
            continue
        results.append(_result_from_store(store, problem, run, algorithm))
    report = build_report(results, failures)
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def report_from_stores(problems, out_dir, runs_per_algorithm: int | None = None) -> ExperimentReport:
    """Rebuild the report from the per-run stores under ``out_dir/stores``."""
    store_dir = Path(out_dir) / "stores"
    results: list[RunResult] = []
    failures: list[str] = []
    by_id = {p.problem_id: p for p in problems}
    for path in sorted(store_dir.glob("*.store")):
        try:
            algorithm, pid, run = path.stem.split("_")
            problem = by_id[int(pid[1:])]
            store = ResultStore.load(path)
        except (ValueError, KeyError, StoreError) as exc:
            failures.append(f"{path.name}: {exc}")
            log.error("skipping %s: %s", path, exc)
            continue
        if not store.metadata.get("complete"):
            failures.append(f"{path.name}: incomplete run")
            continue
        results.append(_result_from_store(store, problem, int(run[1:]), algorithm))
    if runs_per_algorithm is not None:
        expected = len(problems) * runs_per_algorithm * len(ALGORITHMS)
        if len(results) < expected:
            failures.append(f"{expected - len(results)} run(s) missing")
    report = build_report(results, failures)
    write_report(report, out_dir)
    return report


def write_report(report: ExperimentReport, out_dir) -> None:
    """report.json, runs.csv, histogram.csv and boxplot.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    with (out_dir / "runs.csv").open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["problem", "variant", "run", "algorithm", "best_r2", "unique"])
        for r in report.runs:
            writer.writerow([r.problem_id, r.variant, r.run, r.algorithm, repr(r.best_r2), r.unique])
    with (out_dir / "histogram.csv").open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["cohort", "algorithm", "bin_low", "bin_high", "count"])
        for cohort, data in report.summary.items():
            for algorithm in ALGORITHMS:
                h = data[algorithm]["histogram"]
                for c, lo, hi in zip(h["counts"], h["edges"][:-1], h["edges"][1:]):
                    writer.writerow([cohort, algorithm, repr(lo), repr(hi), c])
    with (out_dir / "boxplot.csv").open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["cohort", "algorithm", "min", "q1", "median", "q3", "max", "mean"])
        for cohort, data in report.summary.items():
            for algorithm in ALGORITHMS:
                b = data[algorithm]["boxplot"]
                writer.writerow(
                    [cohort, algorithm] + [repr(b[k]) for k in ("min", "q1", "median", "q3", "max")]
                    + [repr(data[algorithm]["mean"])]
                )

