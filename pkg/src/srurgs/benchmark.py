"""Random benchmark problems and the on-disk suite format.

Suite directory::

    manifest.json       ids, seeds, variants, true equations and parameters
    problem_<id>.csv    dataset in the CSV contract (last column y)
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from srurgs.data import Dataset, load_dataset, write_dataset
from srurgs.errors import DatasetError, GenerationError
from srurgs.expression import evaluate_raw, parse, to_string
from srurgs.search import derive_seeds, random_equation
from srurgs.space import EXTENDED_BINARY, SIMPLE_BINARY, UNARY_FUNCTIONS, SearchSpaceConfig

SUITE_FORMAT = "srurgs-benchmark-suite"
SUITE_VERSION = 1
VARIANTS = ("simple", "extended")


@dataclass(frozen=True)
class GenerationConfig:
    variant: str = "extended"
    N: int = 200
    max_variables: int = 5
    max_parameters: int = 5
    n_rows: int = 100
    variable_domain: tuple[float, float] = (0.0, 10.0)
    parameter_domain: tuple[float, float] = (-10.0, 10.0)
    max_attempts: int = 10_000
    min_variance: float = 1e-12

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


@dataclass
class BenchmarkProblem:
    problem_id: int
    variant: str
    seed: int
    equation: str
    params: list[float]
    space: SearchSpaceConfig
    data: Dataset
    attempts: int = 1
    extra: dict = field(default_factory=dict)

    def manifest_entry(self) -> dict:
        return {
            "id": self.problem_id,
            "variant": self.variant,
            "seed": self.seed,
            "equation": self.equation,
            "params": self.params,
            "space": self.space.to_dict(),
            "attempts": self.attempts,
            "file": f"problem_{self.problem_id}.csv",
        }


def generation_space(cfg: GenerationConfig, n_variables: int, n_parameters: int) -> SearchSpaceConfig:
    variables = [f"x{k}" for k in range(n_variables)]
    if cfg.variant == "simple":
        return SearchSpaceConfig.create(SIMPLE_BINARY, variables, n_parameters, N=cfg.N)
    return SearchSpaceConfig.create(EXTENDED_BINARY, variables, n_parameters, unary=UNARY_FUNCTIONS, N=cfg.N)


def generate_problem(cfg: GenerationConfig, seed: int, problem_id: int = 0) -> BenchmarkProblem:
    """Draw one problem; everything derives from ``seed``.

    Variable and parameter counts are uniform in [1, max]; the data matrix is
    drawn once. The equation and its parameter values are redrawn until the
    target is finite on every row and not constant.
    """
    rng = random.Random(seed)
    n_variables = rng.randint(1, cfg.max_variables)
    n_parameters = rng.randint(1, cfg.max_parameters)
    space = generation_space(cfg, n_variables, n_parameters)
    lo, hi = cfg.variable_domain
    X = np.array([[rng.uniform(lo, hi) for _ in range(n_variables)] for _ in range(cfg.n_rows)])
    columns = {name: X[:, k].copy() for k, name in enumerate(space.variables)}
    plo, phi = cfg.parameter_domain
    for attempt in range(1, cfg.max_attempts + 1):
        expr = random_equation(space, rng)
        params = [rng.uniform(plo, phi) for _ in range(n_parameters)]
        y = evaluate_raw(expr, columns, params, cfg.n_rows)
        with np.errstate(over="ignore"):
            spread = float(np.var(y)) * cfg.n_rows if np.all(np.isfinite(y)) else -1.0
        if spread >= cfg.min_variance:
            data = Dataset(space.variables, X, y)
            return BenchmarkProblem(problem_id, cfg.variant, seed, to_string(expr), params, space, data, attempt)
    raise GenerationError(f"no finite, non-constant problem within {cfg.max_attempts} attempts (seed {seed})")


def generate_suite(seed: int, n_simple: int = 20, n_extended: int = 80, base: GenerationConfig | None = None):
    """``n_simple`` simple-variant problems followed by ``n_extended`` extended ones."""
    base = base or GenerationConfig()
    seeds = derive_seeds(seed, n_simple + n_extended)
    problems = []
    for pid, problem_seed in enumerate(seeds):
        variant = "simple" if pid < n_simple else "extended"
        cfg = GenerationConfig(**{**base.__dict__, "variant": variant})
        problems.append(generate_problem(cfg, problem_seed, pid))
    return problems


def write_suite(problems, directory, seed: int | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for problem in problems:
        write_dataset(problem.data, directory / f"problem_{problem.problem_id}.csv")
    manifest = {
        "format": SUITE_FORMAT,
        "version": SUITE_VERSION,
        "seed": seed,
        "problems": [p.manifest_entry() for p in problems],
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_suite(directory) -> list[BenchmarkProblem]:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DatasetError(f"{directory}: cannot read suite manifest ({exc})") from None
    if manifest.get("format") != SUITE_FORMAT:
        raise DatasetError(f"{directory}: not a benchmark suite")
    problems = []
    for entry in manifest["problems"]:
        space = SearchSpaceConfig.from_dict(entry["space"])
        data = load_dataset(directory / entry["file"])
        if data.names != space.variables:
            raise DatasetError(f"{entry['file']}: columns {data.names} do not match space variables {space.variables}")
        parse(entry["equation"])
        problems.append(
            BenchmarkProblem(
                entry["id"], entry["variant"], entry["seed"], entry["equation"],
                [float(v) for v in entry["params"]], space, data, entry.get("attempts", 1),
            )
        )
    return problems
