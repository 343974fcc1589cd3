"""Single-task baselines: per-task OLS, ridge, and lasso.

Each task is fitted independently on its own rows; no information crosses
tasks. OLS and ridge use exact normal equations, lasso reuses the proximal
solver with a single task. A rank-deficient OLS system either raises or, on
request, falls back to the minimum-norm least-squares solution so rolling
comparisons can still score data-starved tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .design import TaskData, WeightMatrix
from .solver import RegularizerSpec, SolverParams, fit

STL_KINDS = ("ols", "ridge", "lasso")

# Penalty grid searched by per-task 5-fold cross-validation when a ridge
# penalty is not given explicitly.
RIDGE_CV_GRID: tuple[float, ...] = tuple(10.0 ** e for e in range(-4, 3))


class SingularSystemError(ValueError):
    """The OLS normal matrix is singular; ridge regularization would fix it."""


@dataclass(frozen=True)
class StlSpec:
    kind: str
    penalty: Optional[float] = None
    penalize_intercept: bool = False
    on_singular: str = "error"  # error | lstsq

    def __post_init__(self):
        if self.kind not in STL_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.penalty is not None and self.penalty < 0:
            raise ValueError("penalty must be nonnegative")
        if self.kind == "lasso" and self.penalty is None:
            raise ValueError("lasso needs an explicit penalty")
        if self.on_singular not in ("error", "lstsq"):
            raise ValueError(f"unknown singular policy {self.on_singular!r}")


def fit_stl(
    data: TaskData, spec: StlSpec, params: SolverParams = SolverParams()
) -> WeightMatrix:
    """Fit every task independently and assemble the D x P weight matrix."""
    columns = []
    for p in range(data.n_tasks):
        x, y = data.xs[p], data.ys[p]
        if spec.kind == "ols":
            columns.append(_solve_ols(x, y, spec))
        elif spec.kind == "ridge":
            penalty = spec.penalty
            if penalty is None:
                penalty = cv_ridge_penalty(x, y, penalize_intercept=spec.penalize_intercept)
            columns.append(_solve_ridge(x, y, penalty, spec.penalize_intercept))
        else:
            single = TaskData.from_arrays([x], [y], [data.task_ids[p]])
            reg = RegularizerSpec(
                kind="lasso", theta1=spec.penalty, penalize_intercept=spec.penalize_intercept
            )
            columns.append(fit(single, reg, params).weights.values[:, 0])
    values = np.column_stack(columns)
    return WeightMatrix(values=values, task_ids=data.task_ids, columns=data.columns)


def _solve_ols(x: np.ndarray, y: np.ndarray, spec: StlSpec) -> np.ndarray:
    d = x.shape[1]
    if np.linalg.matrix_rank(x) < d:
        if spec.on_singular == "error":
            raise SingularSystemError(
                "normal matrix is singular (too few rows or collinear columns); "
                "use ridge regression instead"
            )
        solution, *_ = np.linalg.lstsq(x, y, rcond=None)
        return solution
    return np.linalg.solve(x.T @ x, x.T @ y)


def _solve_ridge(
    x: np.ndarray, y: np.ndarray, penalty: float, penalize_intercept: bool
) -> np.ndarray:
    d = x.shape[1]
    shrink = np.eye(d)
    if not penalize_intercept:
        shrink[-1, -1] = 0.0
    return np.linalg.solve(x.T @ x + penalty * shrink, x.T @ y)


def cv_ridge_penalty(
    x: np.ndarray,
    y: np.ndarray,
    grid: tuple[float, ...] = RIDGE_CV_GRID,
    n_folds: int = 5,
    penalize_intercept: bool = False,
) -> float:
    """Pick the ridge penalty by deterministic k-fold cross-validation.

    Folds are contiguous row blocks, so the choice depends only on this task's
    own rows. Tasks too small to split fall back to the middle of the grid.
    """
    m = x.shape[0]
    if m < 2:
        return grid[len(grid) // 2]
    folds = np.array_split(np.arange(m), min(n_folds, m))
    best_penalty, best_sse = grid[0], np.inf
    for penalty in grid:
        sse = 0.0
        for fold in folds:
            mask = np.ones(m, dtype=bool)
            mask[fold] = False
            w = _solve_ridge(x[mask], y[mask], penalty, penalize_intercept)
            residual = x[fold] @ w - y[fold]
            sse += float(residual @ residual)
        if sse < best_sse:
            best_penalty, best_sse = penalty, sse
    return best_penalty
