import json

import numpy as np
import pytest

from srurgs.benchmark import GenerationConfig, generate_problem, generate_suite, load_suite, write_suite
from srurgs.errors import DatasetError, GenerationError
from srurgs.expression import evaluate, parse, variable_names
from srurgs.fitting import fit_constants
from srurgs.space import EXTENDED_BINARY, SIMPLE_BINARY, UNARY_FUNCTIONS


def test_problem_is_consistent():
    cfg = GenerationConfig(variant="extended", N=50, n_rows=40)
    problem = generate_problem(cfg, seed=3, problem_id=7)
    assert problem.problem_id == 7
    assert problem.space.binary_funcs == EXTENDED_BINARY
    assert problem.space.unary_funcs == UNARY_FUNCTIONS
    assert 1 <= len(problem.space.variables) <= 5
    assert 1 <= len(problem.params) <= 5
    assert problem.data.n_rows == 40
    assert np.all((problem.data.X >= 0.0) & (problem.data.X <= 10.0))
    assert all(-10.0 <= p <= 10.0 for p in problem.params)
    assert np.all(np.isfinite(problem.data.y))
    assert np.var(problem.data.y) > 0
    y = evaluate(parse(problem.equation), problem.data, problem.params)
    np.testing.assert_allclose(y, problem.data.y, rtol=1e-12)
    assert variable_names(parse(problem.equation)) <= set(problem.space.variables)


def test_simple_variant_space():
    problem = generate_problem(GenerationConfig(variant="simple", N=30, n_rows=20), seed=1)
    assert problem.space.binary_funcs == SIMPLE_BINARY
    assert problem.space.unary_funcs == ()


def test_generation_is_deterministic():
    cfg = GenerationConfig(N=40, n_rows=20)
    a, b = generate_problem(cfg, 11), generate_problem(cfg, 11)
    assert a.equation == b.equation and a.params == b.params
    np.testing.assert_array_equal(a.data.X, b.data.X)


def test_generation_gives_up():
    # a single-leaf space with a huge variance floor never succeeds
    cfg = GenerationConfig(N=1, n_rows=5, max_attempts=20, min_variance=1e300)
    with pytest.raises(GenerationError):
        generate_problem(cfg, 0)


def test_suite_round_trip(tmp_path):
    base = GenerationConfig(N=30, n_rows=15)
    problems = generate_suite(5, n_simple=2, n_extended=3, base=base)
    assert [p.variant for p in problems] == ["simple"] * 2 + ["extended"] * 3
    assert [p.problem_id for p in problems] == list(range(5))
    write_suite(problems, tmp_path, 5)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 5 and len(manifest["problems"]) == 5
    loaded = load_suite(tmp_path)
    for orig, back in zip(problems, loaded):
        assert back.equation == orig.equation
        assert back.params == orig.params
        assert back.space == orig.space
        np.testing.assert_array_equal(back.data.X, orig.data.X)
        np.testing.assert_array_equal(back.data.y, orig.data.y)


def test_suite_files_are_byte_identical(tmp_path):
    base = GenerationConfig(N=30, n_rows=10)
    for name in ("a", "b"):
        write_suite(generate_suite(9, 1, 1, base), tmp_path / name, 9)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_load_suite_errors(tmp_path):
    with pytest.raises(DatasetError):
        load_suite(tmp_path)
    (tmp_path / "manifest.json").write_text('{"format": "other"}')
    with pytest.raises(DatasetError):
        load_suite(tmp_path)


@pytest.mark.parametrize("seed", range(4))
def test_true_structure_refits_exactly(seed):
    problem = generate_problem(GenerationConfig(variant="extended", N=60, n_rows=30), seed)
    fit = fit_constants(parse(problem.equation), problem.data, init=problem.params)
    assert fit.r2 >= 1 - 1e-6


def test_default_suite_shape():
    problems = generate_suite(0, base=GenerationConfig(N=40, n_rows=100))
    assert [p.variant for p in problems].count("simple") == 20
    assert [p.variant for p in problems].count("extended") == 80
    assert all(p.data.n_rows == 100 for p in problems)
