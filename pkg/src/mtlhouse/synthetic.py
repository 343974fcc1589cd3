"""Calibrated synthetic transaction data with planted multi-task structure.

Numeric features are drawn uniformly inside realistic Melbourne-style ranges.
Each record belongs to one planted task (exposed through the SA3 region code,
with SA4 a coarser grouping of four tasks apiece); log prices follow a shared
sparse linear model plus small per-task coefficient deviations and optional
observation noise, and the planted weight matrix is returned for recovery
tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .data import Dataset, FeatureEntry, FeatureSchema, HouseRecord, month_index
from .design import INTERCEPT, WeightMatrix

# (name, low, high) inventory used to calibrate generated numeric features;
# the first n_features entries are used, generic unit-range features beyond.
NUMERIC_RANGES: tuple[tuple[str, float, float], ...] = (
    ("LAND_SIZE", 340.0, 2500.0),
    ("INCOME", 935.0, 2836.0),
    ("DIST_STATION", 23.0, 5040.0),
    ("TIME_STATION", 1.0, 126.0),
    ("DIST_CBD", 1300.0, 82600.0),
    ("TIME_CBD", 6.0, 101.0),
    ("DRIVE_DIST_CBD", 1245.0, 83497.0),
    ("DRIVE_TIME_CBD", 10.0, 120.0),
    ("DIST_SHOP", 5.0, 4999.0),
    ("DIST_HOSPITAL", 15.0, 5000.0),
    ("DIST_GP", 8.0, 4999.0),
    ("DIST_MARKET", 25.0, 5000.0),
    ("BEDROOMS", 1.0, 5.0),
    ("BATHROOMS", 1.0, 3.0),
    ("PARKING", 1.0, 5.0),
)

START_MONTH = month_index("2014-10")
BASE_LOG_PRICE = 13.4  # roughly the log of a typical sale price
TASK_KEY = "SA3"
COARSE_KEY = "SA4"
TASKS_PER_COARSE_REGION = 4

MonthlyCount = Union[int, tuple[int, int]]


@dataclass(frozen=True)
class SyntheticConfig:
    n_tasks: int
    n_features: int
    samples_per_task_per_month: Union[MonthlyCount, Sequence[MonthlyCount]]
    months: int
    shared_support_size: int
    coefficient_noise: float
    observation_noise: float
    seed: int

    def __post_init__(self):
        if min(self.n_tasks, self.n_features, self.months, self.shared_support_size) < 1:
            raise ValueError("all counts must be >= 1")
        if self.shared_support_size > self.n_features:
            raise ValueError("shared_support_size cannot exceed n_features")
        if self.coefficient_noise < 0 or self.observation_noise < 0:
            raise ValueError("noise parameters must be nonnegative")
        for lo, hi in self.monthly_count_bounds():
            if lo < 0 or hi < max(lo, 1):
                raise ValueError(f"bad monthly sample bounds ({lo}, {hi})")

    def monthly_count_bounds(self) -> tuple[tuple[int, int], ...]:
        """Per-task (low, high) bounds for the monthly sample count draw."""
        spec = self.samples_per_task_per_month
        if isinstance(spec, int):
            return ((spec, spec),) * self.n_tasks
        spec = tuple(spec)
        if len(spec) == 2 and all(isinstance(v, int) for v in spec):
            return (tuple(spec),) * self.n_tasks  # type: ignore[return-value]
        if len(spec) != self.n_tasks:
            raise ValueError(
                f"per-task sample spec has {len(spec)} entries for {self.n_tasks} tasks"
            )
        out = []
        for entry in spec:
            if isinstance(entry, int):
                out.append((entry, entry))
            else:
                out.append((int(entry[0]), int(entry[1])))
        return tuple(out)

    def to_dict(self) -> dict:
        spec = self.samples_per_task_per_month
        if not isinstance(spec, int):
            spec = [list(e) if not isinstance(e, int) else e for e in spec]
        return {
            "n_tasks": self.n_tasks,
            "n_features": self.n_features,
            "samples_per_task_per_month": spec,
            "months": self.months,
            "shared_support_size": self.shared_support_size,
            "coefficient_noise": self.coefficient_noise,
            "observation_noise": self.observation_noise,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SyntheticConfig":
        spec = raw["samples_per_task_per_month"]
        if isinstance(spec, list):
            spec = tuple(tuple(e) if isinstance(e, list) else e for e in spec)
        return cls(
            n_tasks=int(raw["n_tasks"]),
            n_features=int(raw["n_features"]),
            samples_per_task_per_month=spec,
            months=int(raw["months"]),
            shared_support_size=int(raw["shared_support_size"]),
            coefficient_noise=float(raw["coefficient_noise"]),
            observation_noise=float(raw["observation_noise"]),
            seed=int(raw["seed"]),
        )


def feature_ranges(n_features: int) -> tuple[tuple[str, float, float], ...]:
    ranges = list(NUMERIC_RANGES[:n_features])
    for i in range(len(ranges), n_features):
        ranges.append((f"X{i:02d}", 0.0, 1.0))
    return tuple(ranges)


def range_stats(n_features: int) -> tuple[np.ndarray, np.ndarray]:
    """Population mean and standard deviation of each uniform feature draw."""
    ranges = feature_ranges(n_features)
    means = np.array([(lo + hi) / 2.0 for _, lo, hi in ranges])
    stds = np.array([(hi - lo) / math.sqrt(12.0) for _, lo, hi in ranges])
    return means, stds


def synthetic_schema(n_features: int) -> FeatureSchema:
    entries = [FeatureEntry(name, "numeric", "house") for name, _, _ in feature_ranges(n_features)]
    entries.append(FeatureEntry(COARSE_KEY, "key", "house"))
    entries.append(FeatureEntry(TASK_KEY, "key", "house"))
    entries.append(FeatureEntry("DATE", "categorical", "meta"))
    entries.append(FeatureEntry("PRICE", "numeric", "meta"))
    return FeatureSchema(tuple(entries))


def task_code(p: int) -> str:
    return f"R{p:03d}"


def coarse_code(p: int) -> str:
    return f"A{p // TASKS_PER_COARSE_REGION:02d}"


def planted_design(records: Sequence[HouseRecord], n_features: int) -> np.ndarray:
    """Rows in the planted basis: range-standardized numerics plus intercept."""
    names = [name for name, _, _ in feature_ranges(n_features)]
    means, stds = range_stats(n_features)
    rows = np.ones((len(records), n_features + 1))
    for i, record in enumerate(records):
        for j, name in enumerate(names):
            rows[i, j] = (float(record.values[name]) - means[j]) / stds[j]
    return rows


def generate_synthetic(config: SyntheticConfig) -> tuple[Dataset, WeightMatrix]:
    """Deterministically generate a dataset and its planted weight matrix.

    The planted model lives in the basis of :func:`planted_design`: columns of
    the returned matrix are per-task weights over the range-standardized
    features plus a trailing intercept.
    """
    rng = np.random.default_rng(config.seed)
    n, p_count = config.n_features, config.n_tasks
    ranges = feature_ranges(n)
    lows = np.array([lo for _, lo, hi in ranges])
    highs = np.array([hi for _, lo, hi in ranges])
    means, stds = range_stats(n)
    names = [name for name, _, _ in ranges]

    support = np.sort(rng.choice(n, size=config.shared_support_size, replace=False))
    magnitudes = rng.uniform(0.15, 0.5, size=config.shared_support_size)
    signs = rng.choice([-1.0, 1.0], size=config.shared_support_size)
    shared = np.zeros(n + 1)
    shared[support] = magnitudes * signs
    shared[-1] = BASE_LOG_PRICE

    planted = np.tile(shared[:, None], (1, p_count))
    deviation_rows = np.append(support, n)  # support features plus the intercept
    planted[deviation_rows, :] += rng.normal(
        0.0, config.coefficient_noise, size=(len(deviation_rows), p_count)
    )

    bounds = config.monthly_count_bounds()
    records: list[HouseRecord] = []
    for month_offset in range(config.months):
        month = START_MONTH + month_offset
        for p in range(p_count):
            lo, hi = bounds[p]
            count = int(rng.integers(lo, hi + 1))
            if count == 0:
                continue
            raw = rng.uniform(lows, highs, size=(count, n))
            standardized = (raw - means) / stds
            noise = rng.normal(0.0, config.observation_noise, size=count)
            log_prices = standardized @ planted[:-1, p] + planted[-1, p] + noise
            for i in range(count):
                values: dict[str, Union[float, str]] = {
                    name: float(raw[i, j]) for j, name in enumerate(names)
                }
                values[COARSE_KEY] = coarse_code(p)
                values[TASK_KEY] = task_code(p)
                records.append(
                    HouseRecord(
                        sale_month=month,
                        values=values,
                        price=float(np.exp(log_prices[i])),
                    )
                )

    dataset = Dataset(schema=synthetic_schema(n), records=tuple(records))
    weights = WeightMatrix(
        values=planted,
        task_ids=tuple(task_code(p) for p in range(p_count)),
        columns=tuple(names) + (INTERCEPT,),
    )
    return dataset, weights
