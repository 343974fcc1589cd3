"""Rolling monthly prediction protocol and method comparison.

Each round trains every method on the k months preceding one test month and
scores per-task predictions for that month. Reports aggregate the per-round
task means, run rank-sum significance tests against a benchmark method, and
tabulate Win-Loss-Draw records inside quartile groups of task sample counts.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import StlSpec, fit_stl
from .data import Dataset
from .design import DesignLayout, TaskData, WeightMatrix, build_task_data, design_rows
from .metrics import (
    MethodSummary,
    MetricRecord,
    RankSumOutcome,
    aggregate,
    mae,
    rmse,
    wilcoxon_rank_sum,
    win_loss_draw,
)
from .solver import RegularizerSpec, SolverParams, fit
from .tasks import (
    GROUP_LABELS,
    TaskDefinition,
    TaskSet,
    define_tasks,
    quartile_groups,
)

logger = logging.getLogger(__name__)

MTL_KINDS = ("mtl_lasso", "mtl_l21", "mtl_graph")
STL_METHOD_KINDS = ("ols", "ridge", "lasso")
METHOD_KINDS = MTL_KINDS + STL_METHOD_KINDS

_REG_KIND = {"mtl_lasso": "lasso", "mtl_l21": "group_l21", "mtl_graph": "graph"}


@dataclass(frozen=True)
class Round:
    train_window: tuple[int, int]
    test_month: int


@dataclass(frozen=True)
class RollingPlan:
    rounds: tuple[Round, ...]
    k: int
    h: int = 1

    def __post_init__(self):
        previous_test = None
        for r in self.rounds:
            lo, hi = r.train_window
            if hi - lo + 1 != self.k or hi + self.h != r.test_month:
                raise ValueError(f"malformed round {r}")
            if previous_test is not None and r.test_month <= previous_test:
                raise ValueError("test months must be strictly increasing")
            previous_test = r.test_month

    def __len__(self) -> int:
        return len(self.rounds)

    @property
    def train_span(self) -> tuple[int, int]:
        return self.rounds[0].train_window[0], self.rounds[-1].train_window[1]


def make_rolling_plan(dataset: Dataset, k: int = 3, h: int = 1) -> RollingPlan:
    """One round per month whose k preceding months lie inside the dataset."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if h != 1:
        raise ValueError("only a one-month horizon is supported")
    first, last = dataset.month_range
    if last - first + 1 < k + h:
        raise ValueError(
            f"dataset spans {last - first + 1} months; need at least {k + h}"
        )
    rounds = tuple(
        Round(train_window=(m - k, m - 1), test_month=m)
        for m in range(first + k, last + 1)
    )
    return RollingPlan(rounds=rounds, k=k, h=h)


@dataclass(frozen=True)
class MethodSpec:
    """A method plus its hyperparameter grid.

    Multi-point grids are resolved per round by refitting on the window minus
    its last month and scoring that month; the best point is then refitted on
    the full window. A ridge spec with an empty grid delegates to per-task
    cross-validation.
    """

    label: str
    kind: str
    theta1: tuple[float, ...] = ()
    theta2: tuple[float, ...] = ()
    penalty: tuple[float, ...] = ()
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.kind in MTL_KINDS and not self.theta1:
            raise ValueError(f"{self.kind} needs a theta1 grid")
        if self.kind == "mtl_graph" and not self.theta2:
            raise ValueError("mtl_graph needs a theta2 grid")
        if self.kind == "lasso" and not self.penalty:
            raise ValueError("stl lasso needs a penalty grid")

    def grid_points(self) -> tuple[tuple[Optional[float], ...], ...]:
        if self.kind == "mtl_graph":
            return tuple(itertools.product(self.theta1, self.theta2))
        if self.kind in MTL_KINDS:
            return tuple((t,) for t in self.theta1)
        if self.kind == "ols":
            return ((),)
        if not self.penalty:  # ridge with per-task CV
            return ((None,),)
        return tuple((p,) for p in self.penalty)


def _fit_point(data: TaskData, spec: MethodSpec, point: tuple) -> WeightMatrix:
    if spec.kind in MTL_KINDS:
        reg_kind = _REG_KIND[spec.kind]
        if spec.kind == "mtl_graph":
            reg = RegularizerSpec(kind=reg_kind, theta1=point[0], theta2=point[1])
        else:
            reg = RegularizerSpec(kind=reg_kind, theta1=point[0])
        return fit(data, reg, spec.solver).weights
    penalty = point[0] if point else None
    stl = StlSpec(kind=spec.kind, penalty=penalty, on_singular="lstsq")
    return fit_stl(data, stl, spec.solver)


@dataclass(frozen=True)
class ComparisonReport:
    benchmark: str
    summaries: dict[str, MethodSummary]
    rank_sum: dict[str, RankSumOutcome]
    quartile_boundaries: Optional[tuple[int, int, int]]
    quartile_tasks: dict[str, tuple[str, ...]]
    quartile_wld: dict[str, dict[str, tuple[int, int, int]]]
    skipped_rounds: tuple[int, ...]


def run_backtest(
    dataset: Dataset,
    taskdef: TaskDefinition,
    methods: Sequence[MethodSpec],
    plan: RollingPlan,
    benchmark: Optional[str] = None,
    alpha: float = 0.05,
) -> tuple[list[MetricRecord], ComparisonReport]:
    """Run the full rolling protocol for one task definition.

    Per round: build training data on the window, fit every method, predict
    the test month, and record per-task RMSE/MAE for tasks that have both
    training and test samples. Rounds with no usable training data are
    skipped with a notice.
    """
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ValueError("method labels must be unique")
    if benchmark is None:
        benchmark = labels[0]
    if benchmark not in labels:
        raise ValueError(f"benchmark {benchmark!r} not among methods {labels}")

    taskset = define_tasks(dataset, taskdef)
    layout = DesignLayout.from_dataset(dataset, taskdef)
    records: list[MetricRecord] = []
    skipped: list[int] = []

    for round_index, round_ in enumerate(plan.rounds):
        try:
            data = build_task_data(dataset, taskset, round_.train_window, layout)
        except ValueError:
            logger.warning("round %d: no task has training data; skipped", round_index)
            skipped.append(round_index)
            continue
        _assert_no_leakage(dataset, taskset, round_)

        test_rows = _test_rows_by_task(dataset, taskset, data, round_.test_month)
        if not test_rows:
            logger.info("round %d: no test samples for any trained task", round_index)
            continue

        for spec in methods:
            point = _select_grid_point(dataset, taskset, layout, round_, spec)
            weights = _fit_point(data, spec, point)
            for task_id, rows in test_rows.items():
                actual = [float(v) for v in rows["y"]]
                predicted = list(rows["x"] @ weights.column(task_id))
                records.append(
                    MetricRecord(
                        round_index=round_index,
                        task_id=task_id,
                        n=len(actual),
                        rmse=rmse(actual, predicted),
                        mae=mae(actual, predicted),
                        method=spec.label,
                    )
                )

    if not records:
        raise ValueError("backtest produced no metric records")
    report = _build_report(records, taskset, plan, labels, benchmark, alpha)
    return records, ComparisonReport(
        benchmark=benchmark,
        summaries=report[0],
        rank_sum=report[1],
        quartile_boundaries=report[2],
        quartile_tasks=report[3],
        quartile_wld=report[4],
        skipped_rounds=tuple(skipped),
    )


def _assert_no_leakage(dataset, taskset: TaskSet, round_: Round) -> None:
    lo, hi = round_.train_window
    train_months = [
        dataset.records[i].sale_month
        for task in taskset.tasks
        for i in task.member_indices
        if lo <= dataset.records[i].sale_month <= hi
    ]
    if train_months and max(train_months) >= round_.test_month:
        raise AssertionError(
            f"leakage: training month {max(train_months)} reaches test month "
            f"{round_.test_month}"
        )


def _test_rows_by_task(dataset, taskset: TaskSet, data: TaskData, test_month: int):
    """Standardized test rows and log targets per task trained this round."""
    out = {}
    trained = set(data.task_ids)
    for task in taskset.tasks:
        rows = [i for i in task.member_indices if dataset.records[i].sale_month == test_month]
        if not rows:
            continue
        if task.task_id not in trained:
            logger.info(
                "task %s has test samples but no training window data; excluded",
                task.task_id,
            )
            continue
        records = [dataset.records[i] for i in rows]
        x = design_rows(records, data.layout, data.standardizer)
        y = np.array([np.log(r.price) for r in records])
        out[task.task_id] = {"x": x, "y": y}
    return out


def _select_grid_point(dataset, taskset, layout, round_: Round, spec: MethodSpec):
    """Pick a grid point by holding out the last training month of the round."""
    points = spec.grid_points()
    if len(points) == 1:
        return points[0]
    lo, hi = round_.train_window
    if lo == hi:
        return points[0]
    try:
        inner = build_task_data(dataset, taskset, (lo, hi - 1), layout)
    except ValueError:
        return points[0]
    validation = _test_rows_by_task(dataset, taskset, inner, hi)
    if not validation:
        return points[0]
    best_point, best_score = points[0], np.inf
    for point in points:
        weights = _fit_point(inner, spec, point)
        errors: list[float] = []
        for task_id, rows in validation.items():
            predicted = rows["x"] @ weights.column(task_id)
            errors.extend((np.asarray(rows["y"]) - predicted) ** 2)
        score = float(np.sqrt(np.mean(errors)))
        if score < best_score:
            best_point, best_score = point, score
    return best_point


def _build_report(records, taskset, plan, labels, benchmark, alpha):
    summaries = aggregate(records)
    for label in labels:
        if label not in summaries:
            raise ValueError(f"method {label!r} produced no records")

    rank_sum = {}
    bench_rounds = dict(zip(summaries[benchmark].rounds, summaries[benchmark].round_rmse))
    for label in labels:
        summary = summaries[label]
        common = [r for r in summary.rounds if r in bench_rounds]
        a = [summary.round_rmse[summary.rounds.index(r)] for r in common]
        b = [bench_rounds[r] for r in common]
        rank_sum[label] = wilcoxon_rank_sum(a, b, alpha=alpha)

    boundaries = None
    group_tasks: dict[str, tuple[str, ...]] = {}
    group_wld: dict[str, dict[str, tuple[int, int, int]]] = {}
    if len(taskset.tasks) >= 4:
        grouping = quartile_groups(taskset, plan.train_span)
        boundaries = grouping.boundaries
        by_task: dict[str, dict[str, list[float]]] = {}
        for record in records:
            by_task.setdefault(record.method, {}).setdefault(record.task_id, []).append(
                record.rmse
            )
        task_score = {
            method: {t: sum(v) / len(v) for t, v in tasks.items()}
            for method, tasks in by_task.items()
        }
        for label_text, ids in zip(GROUP_LABELS, grouping.groups):
            group_tasks[label_text] = ids
            scored = [
                t
                for t in ids
                if all(t in task_score[m] for m in labels)
            ]
            group_wld[label_text] = {
                m: win_loss_draw(
                    [task_score[m][t] for t in scored],
                    [task_score[benchmark][t] for t in scored],
                )
                for m in labels
            }
    return summaries, rank_sum, boundaries, group_tasks, group_wld
