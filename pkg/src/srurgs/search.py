"""Uniform random global search over the enumerated equation space."""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from srurgs.enumeration import arrangements, locate_equation, total_equations
from srurgs.errors import ConfigurationError, FitFailed
from srurgs.expression import EquationIndex, Expr, build_expression, check_space_compatible, simplify, to_string
from srurgs.fitting import INVALID_R2, fit_constants
from srurgs.space import SearchSpaceConfig
from srurgs.store import ResultStore, merge_stores


def make_rng(seed) -> random.Random:
    if isinstance(seed, random.Random):
        return seed
    return random.Random(seed)


def derive_seeds(seed: int, count: int) -> list[int]:
    """Independent child seeds for parallel workers or repeated runs."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(2, dtype=np.uint32).astype(np.uint64) @ np.array([1, 2**32], dtype=np.uint64)) for c in children]


def random_equation_index(space: SearchSpaceConfig, rng: random.Random) -> EquationIndex:
    """Draw an equation uniformly from all M equations of ``space``.

    One exact big-integer draw in [0, M) picks the equation; the tree is found
    by prefix sums and the remainder splits into (q, r, s).
    """
    total = total_equations(space)
    if total < 1:
        raise ConfigurationError("the search space is empty")
    i, offset = locate_equation(space, rng.randrange(total))
    _, A, B = arrangements(i, space)
    q, rest = divmod(offset, A * B)
    r, s = divmod(rest, B)
    return EquationIndex(i, q, r, s)


def random_equation(space: SearchSpaceConfig, rng: random.Random) -> Expr:
    return build_expression(random_equation_index(space, rng), space)


@dataclass
class Assessment:
    key: str
    r2: float
    params: list
    status: str  # "fitted", "duplicate" or "discarded"

    @property
    def valid(self) -> bool:
        return self.status != "discarded"


def assess_candidate(expr: Expr, data, store: ResultStore, discarded: set | None = None) -> Assessment:
    """Simplify, deduplicate against ``store``, fit and record one candidate.

    Shared by the random search and the genetic-programming baseline so both
    count unique equations the same way. Equations whose evaluation is
    non-finite at every start point are counted as discarded and not stored.
    """
    canonical = simplify(expr)
    key = to_string(canonical)
    record = store.get(key)
    if record is not None:
        store.bump(key)
        return Assessment(key, record.r2, record.params, "duplicate")
    if discarded is not None and key in discarded:
        store.metadata["discarded"] += 1
        return Assessment(key, INVALID_R2, [], "discarded")
    try:
        fit = fit_constants(canonical, data)
    except FitFailed:
        store.metadata["discarded"] += 1
        if discarded is not None:
            discarded.add(key)
        return Assessment(key, INVALID_R2, [], "discarded")
    params = [float(v) for v in fit.params]
    store.upsert(key, params, fit.r2)
    return Assessment(key, fit.r2, params, "fitted")


def urgs_search(
    space: SearchSpaceConfig,
    data,
    iterations: int,
    rng=None,
    store: ResultStore | None = None,
    max_unique: int | None = None,
) -> ResultStore:
    """Run ``iterations`` random draws (stopping early once ``max_unique`` keys exist)."""
    if iterations < 1:
        raise ConfigurationError("iterations must be at least 1")
    check_space_compatible(space, data)
    rng = make_rng(rng)
    if store is None:
        store = ResultStore()
    space_hash = space.config_hash()
    if store.metadata.get("space_hash") not in (None, space_hash):
        raise ConfigurationError("store was created for a different search space")
    store.metadata["space_hash"] = space_hash
    discarded: set[str] = set()
    done = 0
    for _ in range(iterations):
        if max_unique is not None and len(store) >= max_unique:
            break
        assess_candidate(random_equation(space, rng), data, store, discarded)
        done += 1
    store.metadata["iterations"] = store.metadata.get("iterations", 0) + done
    return store


def _worker(args):
    space, data, iterations, seed = args
    store = urgs_search(space, data, iterations, random.Random(seed))
    return store.metadata, list(store)


def parallel_search(
    space: SearchSpaceConfig, data, iterations: int, seed: int, workers: int = 1, store: ResultStore | None = None
) -> ResultStore:
    """Split ``iterations`` across processes with independent seed streams, then merge.

    ``workers == 1`` runs in-process from ``random.Random(seed)`` and is
    bitwise deterministic.
    """
    if workers <= 1:
        return urgs_search(space, data, iterations, random.Random(seed), store)
    shares = [iterations // workers + (1 if k < iterations % workers else 0) for k in range(workers)]
    jobs = [(space, data, n, s) for n, s in zip(shares, derive_seeds(seed, workers)) if n > 0]
    merged = store if store is not None else ResultStore(metadata={"space_hash": space.config_hash()})
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_worker, jobs))
    for metadata, records in parts:
        part = ResultStore(metadata=dict(metadata))
        part.records = {r.key: r for r in records}
        combined = merge_stores(merged, part)
        for rec in combined:
            if merged.get(rec.key) != rec:
                merged.records[rec.key] = rec
                merged._append(rec.to_json())
        merged.metadata.update(combined.metadata)
    return merged


def best_r2(store: ResultStore) -> float:
    value = store.best_r2()
    return value if not math.isnan(value) else INVALID_R2
