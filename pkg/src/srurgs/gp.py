"""Tree-based genetic programming comparator.

Generational loop in the style of DEAP's ``eaSimple``: tournament selection,
then subtree crossover on consecutive pairs and uniform subtree mutation,
with no elitism. Candidates go through the same simplify/deduplicate/fit
path as the random search, and the run stops once the store holds
``unique_target`` equations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from srurgs.errors import ConfigurationError
from srurgs.expression import Expr, Func, Param, Var, check_space_compatible
from srurgs.search import assess_candidate, make_rng
from srurgs.space import SearchSpaceConfig
from srurgs.store import ResultStore


@dataclass(frozen=True)
class GPConfig:
    population_size: int = 100
    tournament_size: int = 5
    p_crossover: float = 0.7
    p_mutation: float = 0.3
    init_max_height: int = 4
    mutation_max_height: int = 2
    unique_target: int = 1000
    # stop early when this many generations in a row add no new equation
    max_stall_generations: int = 50
    max_generations: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.p_crossover <= 1.0 and 0.0 <= self.p_mutation <= 1.0):
            raise ConfigurationError("operator probabilities must lie in [0, 1]")
        if self.p_crossover + self.p_mutation > 1.0 + 1e-12:
            raise ConfigurationError("p_crossover + p_mutation must not exceed 1")
        for name in ("population_size", "tournament_size", "init_max_height", "unique_target", "max_stall_generations"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.mutation_max_height < 0:
            raise ConfigurationError("mutation_max_height must be non-negative")


class GPObserver:
    """Hook points for instrumented runs; the default does nothing."""

    def on_tournament(self, contestants: list[float], winner: float) -> None:
        pass

    def on_mutation(self, subtree: Expr) -> None:
        pass

    def on_generation(self, generation: int, unique: int) -> None:
        pass


class _Primitives:
    def __init__(self, space: SearchSpaceConfig):
        self.functions = [(name, 2) for name in space.binary_funcs] + [(name, 1) for name in space.unary_funcs]
        self.terminals = [Param(int(t[1:])) if t in space.parameters else Var(t) for t in space.terminals]
        self.terminal_ratio = len(self.terminals) / (len(self.terminals) + len(self.functions))


def generate_tree(prims: _Primitives, rng: random.Random, min_height: int, max_height: int, method: str) -> Expr:
    """``full``: every branch reaches the drawn height. ``grow``: branches may stop early."""
    target = rng.randint(min_height, max_height)

    def build(depth: int) -> Expr:
        stop = depth == target
        if method == "grow" and depth >= min_height and rng.random() < prims.terminal_ratio:
            stop = True
        if stop:
            return rng.choice(prims.terminals)
        name, arity = rng.choice(prims.functions)
        return Func(name, tuple(build(depth + 1) for _ in range(arity)))

    return build(0)


def ramped_population(prims: _Primitives, rng: random.Random, size: int, max_height: int) -> list[Expr]:
    """Ramped half-and-half: heights cycle 1..max_height, full and grow alternate."""
    population = []
    for k in range(size):
        h = 1 + (k // 2) % max_height
        method = "full" if k % 2 == 0 else "grow"
        population.append(generate_tree(prims, rng, h if method == "full" else 1, h, method))
    return population


def _paths(e: Expr, prefix=()) -> list[tuple]:
    out = [prefix]
    if isinstance(e, Func):
        for k, a in enumerate(e.args):
            out.extend(_paths(a, prefix + (k,)))
    return out


def subtree_at(e: Expr, path: tuple) -> Expr:
    for k in path:
        e = e.args[k]
    return e


def replace_at(e: Expr, path: tuple, new: Expr) -> Expr:
    if not path:
        return new
    k = path[0]
    args = list(e.args)
    args[k] = replace_at(args[k], path[1:], new)
    return Func(e.name, tuple(args))


def crossover(a: Expr, b: Expr, rng: random.Random) -> tuple[Expr, Expr]:
    """One-point subtree swap; roots are excluded unless a parent is a single node."""
    pa, pb = _paths(a), _paths(b)
    if len(pa) < 2 or len(pb) < 2:
        return a, b
    ia = rng.choice(pa[1:])
    ib = rng.choice(pb[1:])
    sa, sb = subtree_at(a, ia), subtree_at(b, ib)
    return replace_at(a, ia, sb), replace_at(b, ib, sa)


def mutate(e: Expr, prims: _Primitives, rng: random.Random, max_height: int, observer: GPObserver | None = None) -> Expr:
    """Replace a random subtree by a full tree of height 0..max_height."""
    path = rng.choice(_paths(e))
    subtree = generate_tree(prims, rng, 0, max_height, "full")
    if observer is not None:
        observer.on_mutation(subtree)
    return replace_at(e, path, subtree)


def tournament(fitnesses: list[float], size: int, rng: random.Random, observer: GPObserver | None = None) -> int:
    """Index of the fittest of ``size`` individuals drawn with replacement (first wins ties)."""
    picks = [rng.randrange(len(fitnesses)) for _ in range(size)]
    winner = max(picks, key=lambda k: fitnesses[k])
    if observer is not None:
        observer.on_tournament([fitnesses[k] for k in picks], fitnesses[winner])
    return winner


def gp_search(
    space: SearchSpaceConfig,
    data,
    cfg: GPConfig | None = None,
    rng=None,
    store: ResultStore | None = None,
    observer: GPObserver | None = None,
) -> ResultStore:
    cfg = cfg or GPConfig()
    check_space_compatible(space, data)
    rng = make_rng(rng)
    if store is None:
        store = ResultStore()
    space_hash = space.config_hash()
    if store.metadata.get("space_hash") not in (None, space_hash):
        raise ConfigurationError("store was created for a different search space")
    store.metadata["space_hash"] = space_hash
    prims = _Primitives(space)
    discarded: set[str] = set()
    evaluations = 0

    def evaluate_all(individuals, fitnesses, which):
        nonlocal evaluations
        for k in which:
            if len(store) >= cfg.unique_target:
                return False
            fitnesses[k] = assess_candidate(individuals[k], data, store, discarded).r2
            evaluations += 1
        return len(store) < cfg.unique_target

    population = ramped_population(prims, rng, cfg.population_size, cfg.init_max_height)
    fitness = [float("-inf")] * cfg.population_size
    running = evaluate_all(population, fitness, range(cfg.population_size))
    generation = 0
    stall = 0
    while running:
        generation += 1
        before = len(store)
        chosen = [tournament(fitness, cfg.tournament_size, rng, observer) for _ in range(cfg.population_size)]
        offspring = [population[k] for k in chosen]
        off_fit = [fitness[k] for k in chosen]
        changed = set()
        for k in range(1, len(offspring), 2):
            if rng.random() < cfg.p_crossover:
                offspring[k - 1], offspring[k] = crossover(offspring[k - 1], offspring[k], rng)
                changed.update((k - 1, k))
        for k in range(len(offspring)):
            if rng.random() < cfg.p_mutation:
                offspring[k] = mutate(offspring[k], prims, rng, cfg.mutation_max_height, observer)
                changed.add(k)
        running = evaluate_all(offspring, off_fit, sorted(changed))
        population, fitness = offspring, off_fit
        if observer is not None:
            observer.on_generation(generation, len(store))
        stall = stall + 1 if len(store) == before else 0
        if stall >= cfg.max_stall_generations:
            break
        if cfg.max_generations is not None and generation >= cfg.max_generations:
            break
    store.metadata["generations"] = store.metadata.get("generations", 0) + generation
    store.metadata["iterations"] = store.metadata.get("iterations", 0) + evaluations
    return store

