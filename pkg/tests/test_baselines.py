import numpy as np
import pytest

from mtlhouse.baselines import (
    RIDGE_CV_GRID,
    SingularSystemError,
    StlSpec,
    cv_ridge_penalty,
    fit_stl,
)
from mtlhouse.design import TaskData
from mtlhouse.solver import RegularizerSpec, SolverParams, fit


def well_conditioned(seed=14, n_tasks=4, rows=30, cols=5):
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for _ in range(n_tasks):
        x = np.hstack([rng.normal(0, 1, (rows, cols - 1)), np.ones((rows, 1))])
        w = rng.normal(0, 0.5, cols)
        w[-1] = 13.0
        xs.append(x)
        ys.append(x @ w + rng.normal(0, 0.1, rows))
    return TaskData.from_arrays(xs, ys)


class TestSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            StlSpec("svr")
        with pytest.raises(ValueError):
            StlSpec("ridge", penalty=-1.0)
        with pytest.raises(ValueError):
            StlSpec("lasso")  # penalty required
        with pytest.raises(ValueError):
            StlSpec("ols", on_singular="retry")


class TestOlsRidge:
    def test_ridge_zero_penalty_equals_ols(self):
        data = well_conditioned()
        ols = fit_stl(data, StlSpec("ols"))
        ridge = fit_stl(data, StlSpec("ridge", penalty=0.0))
        assert np.max(np.abs(ols.values - ridge.values)) <= 1e-10

    def test_one_sample_ridge_matches_tiny_system_oracle(self):
        x = np.array([[2.0, -1.0, 1.0]])  # one record, intercept last
        y = np.array([13.2])
        data = TaskData.from_arrays([x], [y])
        result = fit_stl(data, StlSpec("ridge", penalty=1.0))
        shrink = np.diag([1.0, 1.0, 0.0])
        expected = np.linalg.solve(x.T @ x + shrink, x.T @ y)
        assert np.max(np.abs(result.values[:, 0] - expected)) <= 1e-12

    def test_singular_ols_raises_and_suggests_ridge(self):
        rng = np.random.default_rng(3)
        x = np.hstack([rng.normal(0, 1, (2, 4)), np.ones((2, 1))])  # 2 rows, 5 cols
        data = TaskData.from_arrays([x], [np.array([13.0, 13.5])])
        with pytest.raises(SingularSystemError, match="ridge"):
            fit_stl(data, StlSpec("ols"))

    def test_singular_ols_lstsq_fallback_is_minimum_norm(self):
        rng = np.random.default_rng(4)
        x = np.hstack([rng.normal(0, 1, (2, 4)), np.ones((2, 1))])
        y = np.array([13.0, 13.5])
        data = TaskData.from_arrays([x], [y])
        result = fit_stl(data, StlSpec("ols", on_singular="lstsq"))
        expected = np.linalg.pinv(x) @ y
        assert np.max(np.abs(result.values[:, 0] - expected)) <= 1e-10
        # the fallback interpolates the training rows
        assert np.max(np.abs(x @ result.values[:, 0] - y)) <= 1e-10

    def test_ridge_norm_nonincreasing_in_penalty(self):
        data = well_conditioned(seed=6)
        norms = []
        for penalty in (0.0, 0.1, 1.0, 10.0, 100.0):
            weights = fit_stl(data, StlSpec("ridge", penalty=penalty))
            norms.append(float(np.linalg.norm(weights.values[:-1])))
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


class TestLasso:
    def test_equals_multi_task_fit_with_single_task(self):
        data = well_conditioned()
        params = SolverParams(max_iters=20000, rel_tol=1e-12)
        stl = fit_stl(data, StlSpec("lasso", penalty=0.8), params)
        for p in range(data.n_tasks):
            single = TaskData.from_arrays(
                [data.xs[p]], [data.ys[p]], [data.task_ids[p]]
            )
            mtl = fit(single, RegularizerSpec("lasso", 0.8), params)
            assert np.max(np.abs(stl.values[:, p] - mtl.weights.values[:, 0])) <= 1e-8


class TestIndependence:
    def test_perturbing_one_task_leaves_others_bit_identical(self):
        data = well_conditioned(seed=8)
        perturbed_ys = list(data.ys)
        perturbed_ys[2] = perturbed_ys[2] + 5.0
        perturbed = TaskData.from_arrays(data.xs, perturbed_ys, data.task_ids)
        for spec in (
            StlSpec("ols"),
            StlSpec("ridge", penalty=0.5),
            StlSpec("ridge"),  # CV path
            StlSpec("lasso", penalty=0.5),
        ):
            base = fit_stl(data, spec)
            other = fit_stl(perturbed, spec)
            for p in (0, 1, 3):
                assert np.array_equal(base.values[:, p], other.values[:, p])
            assert not np.array_equal(base.values[:, 2], other.values[:, 2])


class TestRidgeCv:
    def test_deterministic(self):
        data = well_conditioned(seed=10)
        a = cv_ridge_penalty(data.xs[0], data.ys[0])
        b = cv_ridge_penalty(data.xs[0], data.ys[0])
        assert a == b
        assert a in RIDGE_CV_GRID

    def test_tiny_task_falls_back_to_grid_middle(self):
        x = np.array([[1.0, 1.0]])
        y = np.array([13.0])
        assert cv_ridge_penalty(x, y) == RIDGE_CV_GRID[len(RIDGE_CV_GRID) // 2]

    def test_matches_fold_sse_oracle(self):
        rng = np.random.default_rng(11)
        x = np.hstack([rng.normal(0, 1, (11, 4)), np.ones((11, 1))])
        y = rng.normal(13, 0.5, 11)
        chosen = cv_ridge_penalty(x, y)
        # independent re-enumeration of the contiguous 5-fold selection
        folds = np.array_split(np.arange(11), 5)
        best, best_sse = None, np.inf
        shrink = np.eye(5)
        shrink[-1, -1] = 0.0
        for penalty in RIDGE_CV_GRID:
            sse = 0.0
            for fold in folds:
                mask = np.ones(11, dtype=bool)
                mask[fold] = False
                xt, yt = x[mask], y[mask]
                w = np.linalg.solve(xt.T @ xt + penalty * shrink, xt.T @ yt)
                sse += float(np.sum((x[fold] @ w - y[fold]) ** 2))
            if sse < best_sse:
                best, best_sse = penalty, sse
        assert chosen == best
