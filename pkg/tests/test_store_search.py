import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from srurgs.data import Dataset
from srurgs.enumeration import arrangements, node_counts
from srurgs.errors import ConfigurationError, MergeError, StoreError
from srurgs.expression import parse, to_string
from srurgs.search import (
    assess_candidate,
    derive_seeds,
    parallel_search,
    random_equation_index,
    urgs_search,
)
from srurgs.space import SearchSpaceConfig
from srurgs.store import ResultStore, merge_stores, top_results
from srurgs.enumeration import total_equations


def _flat_index(space, idx):
    # global ordinal of (i, q, r, s) in the same layout the sampler uses
    offset = sum(arrangements(t, space).total for t in range(idx.i))
    _, A, B = arrangements(idx.i, space)
    return offset + (idx.q * A + idx.r) * B + idx.s


def test_uniform_sampling_chi_square():
    space = SearchSpaceConfig.create(("add", "mul"), ["x"], 1, N=4)
    M = total_equations(space)
    assert M <= 500
    rng = random.Random(12345)
    counts = Counter(_flat_index(space, random_equation_index(space, rng)) for _ in range(100_000))
    observed = [counts.get(u, 0) for u in range(M)]
    assert sum(observed) == 100_000
    assert chisquare(observed).pvalue > 0.001


def test_sampler_covers_every_equation():
    space = SearchSpaceConfig.create(("add", "sub"), ["x"], 0, unary=("sin",), N=5)
    M = total_equations(space)
    rng = random.Random(1)
    seen = {_flat_index(space, random_equation_index(space, rng)) for _ in range(200 * M)}
    assert seen == set(range(M))


def test_single_tree_space_always_picks_tree_zero():
    space = SearchSpaceConfig.create(("add", "mul"), ["x"], 2, N=1)
    rng = random.Random(0)
    assert {random_equation_index(space, rng).i for _ in range(200)} == {0}


def test_one_equation_space():
    space = SearchSpaceConfig.create(("add",), ["x"], 0, N=1)
    x = np.arange(5.0)
    store = urgs_search(space, Dataset(("x",), x, x), 1, 0)
    assert list(store.keys()) == ["x"]


def test_samples_concentrate_on_large_trees():
    space = SearchSpaceConfig.create(("add", "sub", "div", "mul", "pow"), ["x", "z"], 5, ("exp", "sin", "sinh"), N=200)
    sizes = [sum(node_counts(i, space.mode)) for i in range(space.N)]
    biggest = [i for i in range(space.N) if sizes[i] >= max(sizes) - 1]
    assert len(biggest) / space.N <= 0.02
    rng = random.Random(0)
    trees = [random_equation_index(space, rng).i for _ in range(2000)]
    assert sum(i in biggest for i in trees) / len(trees) > 0.9


def test_derive_seeds_deterministic_and_distinct():
    assert derive_seeds(7, 5) == derive_seeds(7, 5)
    assert len(set(derive_seeds(7, 50))) == 50
    assert derive_seeds(7, 3) != derive_seeds(8, 3)


@pytest.fixture
def sine_data():
    x = np.linspace(0.0, 3.0, 15)
    return Dataset(("x",), x, np.sin(x) + 0.5 * x)


@pytest.fixture
def space():
    return SearchSpaceConfig.create(("add", "mul", "sub", "div"), ["x"], 2, unary=("sin",), N=30)


def test_search_deterministic(space, sine_data):
    a = urgs_search(space, sine_data, 300, 42)
    b = urgs_search(space, sine_data, 300, 42)
    assert a.contents() == b.contents()
    assert a.metadata == b.metadata
    c = urgs_search(space, sine_data, 300, 43)
    assert a.contents() != c.contents()


def test_search_best_monotone(space, sine_data):
    store = ResultStore()
    rng = random.Random(3)
    history = []
    for _ in range(5):
        urgs_search(space, sine_data, 60, rng, store)
        history.append(store.best_r2())
    assert history == sorted(history)
    assert store.metadata["iterations"] == 300


def test_search_counts(space, sine_data):
    store = urgs_search(space, sine_data, 400, 5)
    seen = sum(r.times_seen for r in store)
    assert seen + store.metadata["discarded"] == 400


def test_max_unique_stops_search(space, sine_data):
    store = urgs_search(space, sine_data, 10_000, 5, max_unique=40)
    assert len(store) == 40


def test_search_finds_exact_simple_law():
    x = np.linspace(1.0, 4.0, 12)
    data = Dataset(("x",), x, 3.0 * x + 2.0)
    space = SearchSpaceConfig.create(("add", "mul"), ["x"], 1, N=6)
    store = urgs_search(space, data, 500, 0)
    assert store.best_r2() > 1 - 1e-10


def test_search_rejects_bad_inputs(space, sine_data):
    with pytest.raises(ConfigurationError):
        urgs_search(space, sine_data, 0)
    other = SearchSpaceConfig.create(("add",), ["w"], 1, N=3)
    with pytest.raises(ConfigurationError):
        urgs_search(other, sine_data, 10)
    store = urgs_search(space, sine_data, 10, 1)
    with pytest.raises(ConfigurationError):
        urgs_search(space.with_N(31), sine_data, 10, 1, store)


def test_assess_candidate_dedupes(sine_data):
    store = ResultStore()
    first = assess_candidate(parse("x + p0"), sine_data, store)
    second = assess_candidate(parse("p1 + x"), sine_data, store)
    assert first.status == "fitted" and second.status == "duplicate"
    assert store.get(first.key).times_seen == 2
    discarded = set()
    bad = assess_candidate(parse("p0 / x"), sine_data, store, discarded)
    assert bad.status == "discarded" and not bad.valid
    assess_candidate(parse("p0 / x"), sine_data, store, discarded)
    assert store.metadata["discarded"] == 2


def test_parallel_single_worker_equals_serial(space, sine_data):
    a = parallel_search(space, sine_data, 200, 9, workers=1)
    b = urgs_search(space, sine_data, 200, random.Random(9))
    assert a.contents() == b.contents()


def test_parallel_merge_is_union_of_worker_runs(space, sine_data):
    merged = parallel_search(space, sine_data, 200, 11, workers=2)
    s1, s2 = derive_seeds(11, 2)
    parts = [urgs_search(space, sine_data, 100, random.Random(s)) for s in (s1, s2)]
    assert merged.contents() == merge_stores(*parts).contents()
    assert merged.metadata["iterations"] == 200


# -- store -------------------------------------------------------------------

records = st.lists(
    st.tuples(
        st.sampled_from(["x", "(p0 + x)", "sin(x)", "(p0 * x)", "p0"]),
        st.lists(st.floats(-10, 10), min_size=0, max_size=2),
        st.floats(-1.0, 1.0),
        st.integers(1, 5),
    ),
    max_size=12,
)


def _store(rows):
    s = ResultStore(metadata={"space_hash": "h"})
    for key, params, r2, seen in rows:
        s.upsert(key, params, r2, seen)
    return s


@settings(max_examples=60, deadline=None)
@given(records, records, records)
def test_merge_properties(ra, rb, rc):
    a, b, c = _store(ra), _store(rb), _store(rc)
    ab = merge_stores(a, b)
    assert ab.contents() == merge_stores(b, a).contents()
    assert merge_stores(ab, c).contents() == merge_stores(a, merge_stores(b, c)).contents()
    assert set(ab.keys()) == set(a.keys()) | set(b.keys())
    for rec in ab:
        parts = [s.get(rec.key) for s in (a, b) if rec.key in s]
        assert rec.times_seen == sum(p.times_seen for p in parts)
        assert rec.r2 == max(p.r2 for p in parts)
    assert merge_stores(a, ResultStore()).contents() == a.contents()


def test_merge_self_doubles_counts():
    s = _store([("x", [], 0.5, 2), ("(p0 + x)", [1.0], 0.25, 1)])
    doubled = merge_stores(s, s)
    assert set(doubled.keys()) == set(s.keys())
    assert all(doubled.get(k).times_seen == 2 * s.get(k).times_seen for k in s.keys())


def test_top_results_small_cases():
    assert top_results(ResultStore(), 5) == []
    s = _store([("x", [], 0.5, 1)])
    assert top_results(s, 5) == [s.get("x")]


def test_merge_rejects_different_spaces():
    with pytest.raises(MergeError):
        merge_stores(ResultStore(metadata={"space_hash": "a"}), ResultStore(metadata={"space_hash": "b"}))


@settings(max_examples=60, deadline=None)
@given(records, st.integers(0, 8))
def test_top_results_matches_sort_oracle(rows, count):
    store = _store(rows)
    expected = sorted(store, key=lambda r: (-r.r2, len(r.key), r.key))[:count]
    assert top_results(store, count) == expected


def test_store_round_trip(tmp_path):
    path = tmp_path / "run.store"
    store = ResultStore.open(path, "abc")
    store.upsert("(p0 + x)", [1.5], 0.5)
    store.upsert("(p0 + x)", [2.5], 0.75)
    store.upsert("x", [], -0.25)
    store.bump("x")
    store.close()
    reloaded = ResultStore.load(path)
    assert reloaded.contents() == store.contents()
    assert reloaded.get("x").times_seen == 2
    store.compact()
    assert ResultStore.load(path).contents() == store.contents()
    with pytest.raises(StoreError):
        ResultStore.open(path, "other")


def test_store_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.store"
    bad.write_text("hello\n")
    with pytest.raises(StoreError):
        ResultStore.load(bad)
    bad.write_text("SRURGS-STORE 1\n{not json\n")
    with pytest.raises(StoreError):
        ResultStore.load(bad)


def test_store_persists_search(tmp_path, space, sine_data):
    path = tmp_path / "s.store"
    store = ResultStore.open(path, space.config_hash())
    urgs_search(space, sine_data, 100, 2, store)
    store.compact()
    again = ResultStore.open(path, space.config_hash())
    assert again.contents() == store.contents()
    assert again.metadata["iterations"] == 100
