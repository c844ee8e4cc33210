"""Levenberg-Marquardt constant fitting and the coefficient of determination."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from srurgs.errors import FitFailed, SchemaError
from srurgs.expression import Expr, compile_expression, num_parameters, variable_names

# Ranks below every finite R^2; reports map it to 0.
INVALID_R2 = -math.inf

MAX_ITERATIONS = 100
GRADIENT_TOL = 1e-8
STEP_TOL = 1e-10
COST_TOL = 1e-12
LAMBDA0 = 1e-3
LAMBDA_MAX = 1e16
_EPS_SQRT = math.sqrt(np.finfo(float).eps)


@dataclass
class FitResult:
    params: np.ndarray
    r2: float
    converged: bool
    iterations: int
    ssr: float = field(default=math.nan)


def r_squared(y, yhat) -> float:
    """1 - SS_res / SS_tot; INVALID_R2 when yhat is non-finite or y is constant."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise SchemaError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size < 2:
        raise SchemaError("r_squared needs at least 2 observations")
    if not np.all(np.isfinite(yhat)):
        return INVALID_R2
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return INVALID_R2
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


def clip_r2(value: float) -> float:
    """Map a score into [0, 1]: invalid and negative values become 0."""
    if not math.isfinite(value) or value < 0.0:
        return 0.0
    return min(value, 1.0)


class _Model:
    def __init__(self, expr: Expr, data):
        missing = variable_names(expr) - set(data.columns)
        if missing:
            raise SchemaError(f"dataset has no column(s) {sorted(missing)}")
        self.fn = compile_expression(expr)
        self.columns = data.columns
        self.y = data.y
        self.n = data.n_rows

    def predict(self, p: np.ndarray) -> np.ndarray | None:
        out = self.fn(self.columns, p)
        out = np.asarray(out, dtype=float)
        if out.shape != (self.n,):
            out = np.broadcast_to(out, (self.n,))
        if not np.all(np.isfinite(out)):
            return None
        return out

    def jacobian(self, p: np.ndarray, pred: np.ndarray) -> np.ndarray:
        """Forward differences; falls back to backward, then to a frozen (zero) column."""
        J = np.zeros((self.n, p.size))
        for k in range(p.size):
            h = _EPS_SQRT * max(abs(p[k]), 1.0)
            for step in (h, -h):
                trial = p.copy()
                trial[k] += step
                shifted = self.predict(trial)
                if shifted is not None:
                    J[:, k] = (shifted - pred) / step
                    break
        return J


def fit_constants(expr: Expr, data, init=None, max_iter: int = MAX_ITERATIONS) -> FitResult:
    """Least-squares fit of the parameters of ``expr`` to ``data``.

    Starts from ``init`` or from all ones (retrying once from 0.1). Raises
    FitFailed when no start point gives finite predictions.
    """
    model = _Model(expr, data)
    n_params = num_parameters(expr)
    with np.errstate(all="ignore"):
        if init is not None:
            starts = [np.array(init, dtype=float).reshape(-1)]
            if starts[0].size < n_params:
                raise SchemaError(f"expression needs {n_params} parameter(s), got {starts[0].size}")
        else:
            starts = [np.full(n_params, 1.0), np.full(n_params, 0.1)]
        for p0 in starts:
            pred = model.predict(p0)
            if pred is not None:
                break
        else:
            raise FitFailed("expression is non-finite at every initial guess")
        if n_params == 0:
            ssr = float(np.sum((pred - model.y) ** 2))
            return FitResult(p0, r_squared(model.y, pred), True, 0, ssr)
        return _levenberg_marquardt(model, p0, pred, max_iter)


def _levenberg_marquardt(model: _Model, p: np.ndarray, pred: np.ndarray, max_iter: int) -> FitResult:
    y = model.y
    r = pred - y
    ssr = float(r @ r)
    lam = LAMBDA0
    iterations = 0
    converged = False
    while iterations < max_iter and not converged:
        if ssr == 0.0:
            converged = True
            break
        J = model.jacobian(p, pred)
        g = J.T @ r
        if np.max(np.abs(g)) <= GRADIENT_TOL:
            converged = True
            break
        JTJ = J.T @ J
        scale = np.maximum(np.diag(JTJ), 1e-12)
        accepted = False
        while iterations < max_iter and not accepted:
            iterations += 1
            try:
                delta = np.linalg.solve(JTJ + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                p_new = p + delta
                pred_new = model.predict(p_new)
                if pred_new is not None:
                    r_new = pred_new - y
                    ssr_new = float(r_new @ r_new)
                    if ssr_new < ssr:
                        accepted = True
                        small_gain = ssr - ssr_new <= COST_TOL * ssr
                        p, pred, r, ssr = p_new, pred_new, r_new, ssr_new
                        lam = max(lam / 10.0, 1e-15)
                        if small_gain or np.linalg.norm(delta) <= STEP_TOL * (np.linalg.norm(p) + STEP_TOL):
                            converged = True
                        continue
            lam *= 10.0
            if lam > LAMBDA_MAX:
                # no descent step exists at working precision
                converged = True
                break
    return FitResult(p, r_squared(y, pred), converged, iterations, ssr)
