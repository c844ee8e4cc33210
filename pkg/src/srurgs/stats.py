"""Paired t-test and plot-ready summaries."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc

from srurgs.errors import SchemaError


def paired_t_test(a, b) -> tuple[float, float]:
    """Two-sided paired t-test on ``a - b``.

    The p-value is the regularized incomplete beta I_{df/(df+t^2)}(df/2, 1/2).
    Identical samples give (0, 1); constant non-zero differences give
    (+/-inf, 0).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise SchemaError("paired samples must be 1-d and of equal length")
    if a.size < 2:
        raise SchemaError("a paired t-test needs at least 2 pairs")
    d = a - b
    n = d.size
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, min(max(p, 0.0), 1.0)


def histogram(values, bins: int = 10, value_range=(0.0, 1.0)) -> tuple[list[int], list[float]]:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=value_range)
    return [int(c) for c in counts], [float(e) for e in edges]


def five_number_summary(values) -> dict[str, float]:
    """min, lower quartile, median, upper quartile, max (linear interpolation)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise SchemaError("no values to summarise")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v[0]), "q1": float(q1), "median": float(med), "q3": float(q3), "max": float(v[-1])}
