import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from srurgs.benchmark import GenerationConfig, generate_suite
from srurgs.data import Dataset, load_dataset, write_dataset
from srurgs.errors import ConfigurationError, DatasetError, SchemaError
from srurgs.gp import GPConfig
from srurgs.harness import (
    RunResult,
    build_report,
    quartic_dataset,
    quartic_heatmap,
    quartic_space,
    report_from_stores,
    run_comparison,
)
from srurgs.space import SearchSpaceConfig, parse_function_list
from srurgs.stats import five_number_summary, histogram, paired_t_test


# -- datasets -----------------------------------------------------------------

def test_load_dataset(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x,z,out\n1,2,3\n4,5,6\n\n7,8.5,9\n")
    data = load_dataset(path)
    assert data.names == ("x", "z") and data.target_name == "out"
    np.testing.assert_array_equal(data.y, [3, 6, 9])
    np.testing.assert_array_equal(data.columns["z"], [2, 5, 8.5])


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("", "empty"),
        ("x,y\n1,2\n", "at least 2"),
        ("x,y\n1,2\n3\n", "row 3"),
        ("x,y\n1,2\n3,abc\n", "column 'y'"),
        ("x,y\n1,2\nnan,4\n", "non-finite"),
        ("x,x,y\n1,2,3\n4,5,6\n", "duplicate"),
        ("x,,y\n1,2,3\n4,5,6\n", "blank"),
    ],
)
def test_load_dataset_errors(tmp_path, text, fragment):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DatasetError, match=fragment):
        load_dataset(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "missing.csv")


def test_write_dataset_round_trip(tmp_path):
    data = Dataset(("a", "b"), np.array([[0.1, 1e-17], [2.0 / 3.0, -5.0]]), np.array([np.pi, np.e]))
    write_dataset(data, tmp_path / "d.csv")
    back = load_dataset(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.y, data.y)


def test_dataset_validation():
    with pytest.raises(SchemaError):
        Dataset(("x",), np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(SchemaError):
        Dataset(("x", "z"), np.array([1.0, 2.0]), np.array([1.0, 2.0]))


# -- search space ---------------------------------------------------------------

def test_space_config():
    space = SearchSpaceConfig.create("+,-,*", ["x"], 2, unary="sin", N=7)
    assert space.binary_funcs == ("add", "sub", "mul")
    assert space.mode == "mixed"
    assert space.terminals == ("x", "p0", "p1")
    assert SearchSpaceConfig.from_dict(space.to_dict()) == space
    assert space.config_hash() == SearchSpaceConfig.from_dict(space.to_dict()).config_hash()
    assert space.config_hash() != space.with_N(8).config_hash()
    assert parse_function_list("^, **, /") == ("pow", "pow", "div")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(binary=(), variables=["x"]),
        dict(binary=("sin",), variables=["x"]),
        dict(binary=("add",), variables=["p3"]),
        dict(binary=("add",), variables=["sin"]),
        dict(binary=("add",), variables=["x"], N=0),
        dict(binary=("add",), variables=["x"], unary=("exp",), mode="binary"),
        dict(binary=("add", "add"), variables=["x"]),
    ],
)
def test_space_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SearchSpaceConfig.create(**kwargs)


# -- statistics ----------------------------------------------------------------

def test_paired_t_matches_scipy():
    a = [0.91, 0.85, 0.77, 0.99, 0.62, 0.88]
    b = [0.90, 0.80, 0.79, 0.95, 0.55, 0.86]
    ref = sps.ttest_rel(a, b)
    t, p = paired_t_test(a, b)
    assert abs(t - ref.statistic) < 1e-12
    assert abs(p - ref.pvalue) < 1e-12


def test_paired_t_five_pair_hand_oracle():
    # differences 1..5: mean 3, sd sqrt(2.5), t = 3 / (sqrt(2.5) / sqrt(5)) = sqrt(18)
    a = [2.0, 4.0, 6.0, 8.0, 10.0]
    b = [1.0, 2.0, 3.0, 4.0, 5.0]
    t, p = paired_t_test(a, b)
    assert abs(t - 18**0.5) < 1e-12
    # closed-form Student t CDF for 4 degrees of freedom
    tt = 18**0.5
    s2 = 1.0 + tt * tt / 4.0
    oracle = 1.0 - 0.75 * (tt / s2**0.5) * (1.0 - tt * tt / (12.0 * s2))
    assert abs(oracle - 0.0132) < 1e-4  # printed t-table value
    assert abs(p - oracle) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=3, max_size=30))
def test_paired_t_property(pairs):
    a, b = [x for x, _ in pairs], [y for _, y in pairs]
    t, p = paired_t_test(a, b)
    assert 0.0 <= p <= 1.0
    d = np.subtract(a, b)
    if np.std(d) > 1e-6:
        ref = sps.ttest_rel(a, b)
        assert abs(p - ref.pvalue) < 1e-9
        t2, p2 = paired_t_test(b, a)
        assert t2 == pytest.approx(-t) and p2 == pytest.approx(p)


def test_paired_t_degenerate():
    assert paired_t_test([0.5, 0.7, 0.9], [0.5, 0.7, 0.9]) == (0.0, 1.0)
    t, p = paired_t_test([1.0, 2.0], [0.0, 1.0])
    assert t == float("inf") and p == 0.0
    with pytest.raises(SchemaError):
        paired_t_test([1.0], [1.0])
    with pytest.raises(SchemaError):
        paired_t_test([1.0, 2.0], [1.0])


def test_histogram_oracle():
    counts, edges = histogram([0.0, 0.05, 0.1, 0.55, 0.999, 1.0])
    assert counts == [2, 1, 0, 0, 0, 1, 0, 0, 0, 2]
    assert edges[0] == 0.0 and edges[-1] == 1.0 and len(edges) == 11


def test_five_number_summary_oracle():
    s = five_number_summary([4.0, 1.0, 3.0, 2.0, 5.0])
    assert s == {"min": 1.0, "q1": 2.0, "median": 3.0, "q3": 4.0, "max": 5.0}
    s = five_number_summary([1.0, 2.0, 3.0, 4.0])
    assert (s["q1"], s["median"], s["q3"]) == (1.75, 2.5, 3.25)


# -- quartic slice -------------------------------------------------------------

def test_quartic_dataset():
    data = quartic_dataset()
    assert data.n_rows == 20
    x = data.X[:, 0]
    np.testing.assert_allclose(data.y, x**4 + x**3 + x**2 + x)


def test_heatmap_small_space():
    data = quartic_dataset()
    space = SearchSpaceConfig.create(("add", "mul"), ["x"], 1, N=5)
    grid = quartic_heatmap(space, data, 4)
    assert grid.shape == (8, 16)
    assert np.all((grid >= 0.0) & (grid <= 1.0))
    # (x * x) + (x * p0) fits x^2 + x well but not perfectly
    assert grid.max() > 0.5


def test_heatmap_rejects_mixed_space():
    with pytest.raises(ConfigurationError):
        quartic_heatmap(SearchSpaceConfig.create(("add",), ["x"], 1, unary=("sin",), N=5), quartic_dataset())
    with pytest.raises(ConfigurationError):
        quartic_heatmap(quartic_space(N=3), quartic_dataset(), 4)


# -- comparison ----------------------------------------------------------------

def _mini_suite():
    return generate_suite(21, 1, 1, GenerationConfig(N=20, n_rows=15, max_variables=2, max_parameters=2))


def test_build_report():
    runs = [
        RunResult(0, "simple", 0, "srurgs", 0.9, 10),
        RunResult(0, "simple", 0, "gp", 0.8, 10),
        RunResult(0, "simple", 1, "srurgs", 0.7, 10),
        RunResult(0, "simple", 1, "gp", 0.75, 10),
        RunResult(1, "extended", 0, "gp", 0.5, 10),
    ]
    report = build_report(runs)
    assert report.summary["simple"]["pairs"] == 2
    assert report.summary["all"]["pairs"] == 2
    assert "extended" not in report.summary
    assert report.summary["simple"]["srurgs"]["median"] == pytest.approx(0.8)
    assert report.values("gp") == [0.8, 0.75, 0.5]


def test_run_comparison_and_resume(tmp_path):
    problems = _mini_suite()
    gp_cfg = GPConfig(population_size=20)
    report = run_comparison(problems, 2, 25, seed=3, out_dir=tmp_path, gp_cfg=gp_cfg)
    assert not report.failures
    assert len(report.runs) == 2 * 2 * 2
    assert all(0.0 <= r.best_r2 <= 1.0 for r in report.runs)
    assert all(r.unique <= 25 for r in report.runs)
    for cohort in report.summary.values():
        for algorithm in ("srurgs", "gp"):
            assert sum(cohort[algorithm]["histogram"]["counts"]) == cohort["pairs"]
    p = report.summary["all"]["paired_t"]["p"]
    assert 0.0 <= p <= 1.0
    for name in ("report.json", "runs.csv", "histogram.csv", "boxplot.csv"):
        assert (tmp_path / name).exists()
    first = (tmp_path / "report.json").read_text()
    stamps = {f: f.stat().st_mtime_ns for f in (tmp_path / "stores").iterdir()}
    again = run_comparison(problems, 2, 25, seed=3, out_dir=tmp_path, gp_cfg=gp_cfg)
    assert (tmp_path / "report.json").read_text() == first
    assert {f: f.stat().st_mtime_ns for f in (tmp_path / "stores").iterdir()} == stamps
    assert report_from_stores(problems, tmp_path, 2).to_dict() == again.to_dict()


def test_report_lists_broken_stores(tmp_path):
    problems = _mini_suite()
    run_comparison(problems, 1, 15, seed=0, out_dir=tmp_path, gp_cfg=GPConfig(population_size=10))
    victim = sorted((tmp_path / "stores").iterdir())[0]
    victim.write_text("garbage\n")
    report = report_from_stores(problems, tmp_path, 1)
    assert len(report.failures) == 2  # the unreadable file and the missing run
    with (tmp_path / "runs.csv").open() as handle:
        assert len(list(csv.reader(handle))) == 1 + 3
    # a rerun recomputes the broken store
    fixed = run_comparison(problems, 1, 15, seed=0, out_dir=tmp_path, gp_cfg=GPConfig(population_size=10))
    assert not fixed.failures and len(fixed.runs) == 4
    assert json.loads((tmp_path / "report.json").read_text())["failures"] == []
