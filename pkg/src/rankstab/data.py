"""Periodized datasets: CSV ingestion, preprocessing, synthetic generation.

A dataset is an ordered list of periods sharing one feature schema. All
stochastic operations (downsampling, bootstrapping, generation) are pure
functions of their inputs and an explicit integer seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._seeds import derive_seed

__all__ = [
    "Period",
    "PeriodizedDataset",
    "Scaler",
    "SamplingSpec",
    "SyntheticConfig",
    "load_periodized_csv",
    "write_periodized_csv",
    "fit_scaler",
    "apply_scaler",
    "downsample_majority",
    "bootstrap_sample",
    "spearman_filter",
    "generate_synthetic",
]


@dataclass(frozen=True)
class Period:
    """One time slice: a feature matrix and its binary labels."""

    period_index: int
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels length must match feature rows")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("non-binary label")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class PeriodizedDataset:
    feature_names: tuple
    periods: tuple

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        periods = tuple(self.periods)
        if not periods:
            raise ValueError("dataset needs at least one period")
        for i, period in enumerate(periods):
            if period.period_index != i:
                raise ValueError(
                    f"period indices must be gapless from 0, got {period.period_index} at {i}"
                )
            if period.n_features != len(names):
                raise ValueError("every period must match the feature schema")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "periods", periods)

    @property
    def n_periods(self) -> int:
        return len(self.periods)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class SamplingSpec:
    """How training rows are drawn: full period, majority downsample, or bootstrap."""

    mode: str
    ratio: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("full", "downsample", "bootstrap"):
            raise ValueError(f"unknown sampling mode: {self.mode!r}")
        if self.mode == "downsample" and not self.ratio > 0:
            raise ValueError("downsample ratio must be > 0")


def load_periodized_csv(path, label_column: str, period_column: str) -> PeriodizedDataset:
    """Read a UTF-8 CSV with a header row into a PeriodizedDataset.

    Feature columns are all columns other than the label and period
    columns, in file order. Periods must be integer-valued and, after
    grouping, gapless from 0.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty CSV") from None
        if label_column not in header:
            raise ValueError(f"missing label column {label_column!r}")
        if period_column not in header:
            raise ValueError(f"missing period column {period_column!r}")
        label_at = header.index(label_column)
        period_at = header.index(period_column)
        feature_names = [
            name for i, name in enumerate(header) if i not in (label_at, period_at)
        ]
        feature_cols = [i for i in range(len(header)) if i not in (label_at, period_at)]

        groups: dict = {}
        for row_number, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"row {row_number}: wrong column count")
            raw_period = float(row[period_at])
            if not raw_period.is_integer():
                raise ValueError(f"row {row_number}: non-integer period")
            raw_label = float(row[label_at])
            if raw_label not in (0.0, 1.0):
                raise ValueError(f"row {row_number}: non-binary label")
            values = []
            for col in feature_cols:
                try:
                    v = float(row[col])
                except ValueError:
                    raise ValueError(
                        f"row {row_number}: non-numeric feature cell in {header[col]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ValueError(
                        f"row {row_number}: non-finite feature value in {header[col]!r}"
                    )
                values.append(v)
            groups.setdefault(int(raw_period), ([], []))
            groups[int(raw_period)][0].append(values)
            groups[int(raw_period)][1].append(int(raw_label))

    if not groups:
        raise ValueError("CSV has no data rows")
    indices = sorted(groups)
    if indices != list(range(len(indices))):
        missing = next(i for i in range(len(indices)) if i not in groups)
        raise ValueError(f"empty period {missing}")
    periods = tuple(
        Period(
            period_index=i,
            features=np.asarray(groups[i][0], dtype=np.float64),
            labels=np.asarray(groups[i][1], dtype=np.int64),
        )
        for i in indices
    )
    return PeriodizedDataset(feature_names=tuple(feature_names), periods=periods)


def write_periodized_csv(
    dataset: PeriodizedDataset, path, label_column: str = "label", period_column: str = "period"
) -> None:
    """Write a dataset back to CSV (round-trips with load_periodized_csv)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(dataset.feature_names) + [label_column, period_column])
        for period in dataset.periods:
            for row, label in zip(period.features, period.labels):
                writer.writerow(
                    [repr(float(v)) for v in row] + [int(label), period.period_index]
                )


def fit_scaler(train: Period) -> Scaler:
    if train.n_rows == 0:
        raise ValueError("cannot fit a scaler on an empty period")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    return Scaler(mean=mean, std=std)


def scale_features(scaler: Scaler, features: np.ndarray) -> np.ndarray:
    # zero-variance columns map to exactly 0 rather than dividing by 0
    safe = np.where(scaler.std == 0.0, 1.0, scaler.std)
    return (np.asarray(features, dtype=np.float64) - scaler.mean) / safe


def apply_scaler(scaler: Scaler, data: Period) -> Period:
    return Period(
        period_index=data.period_index,
        features=scale_features(scaler, data.features),
        labels=data.labels,
    )


def downsample_majority(data: Period, ratio: float, seed: int) -> Period:
    """Sample the majority class down to at most ratio times the minority.

    Majority rows are drawn without replacement; minority rows are kept
    untouched; the surviving rows keep their original relative order.
    """
    if not ratio > 0:
        raise ValueError("ratio must be > 0")
    labels = data.labels
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise ValueError("downsampling needs both classes present")
    majority_label = 1 if pos > neg else 0
    majority_count = max(pos, neg)
    minority_count = min(pos, neg)
    cap = int(math.floor(ratio * minority_count))
    if majority_count <= cap:
        return data
    majority_idx = np.nonzero(labels == majority_label)[0]
    rng = np.random.Generator(np.random.PCG64(seed))
    kept = rng.choice(majority_idx, size=cap, replace=False)
    keep = np.sort(np.concatenate([np.nonzero(labels != majority_label)[0], kept]))
    return Period(
        period_index=data.period_index,
        features=data.features[keep],
        labels=labels[keep],
    )


def bootstrap_sample(data: Period, seed: int, require_both_classes: bool = False) -> Period:
    """Resample |data| rows with replacement, deterministically from seed.

    With require_both_classes a draw that loses a class is rejected and
    redrawn from a derived seed (still a pure function of the inputs);
    after 100 rejections the input is reported as effectively single-class.
    """
    if data.n_rows == 0:
        raise ValueError("cannot bootstrap an empty period")
    attempt_seed = seed
    for _ in range(100):
        rng = np.random.Generator(np.random.PCG64(attempt_seed))
        rows = rng.integers(0, data.n_rows, size=data.n_rows)
        sample = Period(
            period_index=data.period_index,
            features=data.features[rows],
            labels=data.labels[rows],
        )
        if not require_both_classes or 0 < int(sample.labels.sum()) < sample.n_rows:
            return sample
        attempt_seed = derive_seed(attempt_seed, ("redraw",))
    raise ValueError("bootstrap could not retain both classes")


def _spearman_rho(a: np.ndarray, b: np.ndarray) -> float:
    from .metrics import _average_ranks

    ra = _average_ranks(a)
    rb = _average_ranks(b)
    sa = ra.std()
    sb = rb.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(((ra - ra.mean()) * (rb - rb.mean())).mean() / (sa * sb))


def spearman_filter(dataset: PeriodizedDataset, threshold: float):
    """Greedy redundancy filter: retained feature indices, ascending.

    A feature is dropped when its |Spearman rho| with an already-retained
    feature reaches the threshold, computed over all periods concatenated.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    stacked = np.concatenate([p.features for p in dataset.periods], axis=0)
    retained: list = []
    for j in range(dataset.n_features):
        redundant = any(
            abs(_spearman_rho(stacked[:, j], stacked[:, r])) >= threshold
            for r in retained
        )
        if not redundant:
            retained.append(j)
    return tuple(retained)


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the synthetic drifting-label generator.

    informative: how many leading features carry signal (default: half).
    dominance: geometric decay of informative coefficient magnitudes; 1.0
        means equal weights, smaller values concentrate importance on the
        first features.
    quantized: number of leading columns snapped to a coarse 0.5 grid,
        which manufactures genuinely tied split gains in tree learners.
    label_rule: "linear" (pure logistic) or "nonlinear" (pairwise
        interaction terms plus a weak linear term).
    drift: per-period multiplicative coefficient change; 0 freezes the
        concept across periods.
    """

    periods: int
    rows_per_period: int
    features: int
    informative: int = 0
    positive_rate: float = 0.5
    drift: float = 0.0
    dominance: float = 1.0
    quantized: int = 0
    label_rule: str = "linear"
    base_coef: float = 2.0

    def __post_init__(self):
        if self.periods < 2:
            raise ValueError("periods must be >= 2")
        if self.rows_per_period < 20:
            raise ValueError("rows_per_period must be >= 20")
        if self.features < 2:
            raise ValueError("features must be >= 2")
        informative = self.informative if self.informative > 0 else max(1, self.features // 2)
        if informative > self.features:
            raise ValueError("informative cannot exceed features")
        object.__setattr__(self, "informative", informative)
        if not 0 < self.positive_rate < 1:
            raise ValueError("positive_rate must be in (0, 1)")
        if self.drift < 0:
            raise ValueError("drift must be >= 0")
        if not 0 < self.dominance <= 1:
            raise ValueError("dominance must be in (0, 1]")
        if not 0 <= self.quantized <= self.features:
            raise ValueError("quantized out of range")
        if self.label_rule not in ("linear", "nonlinear"):
            raise ValueError(f"unknown label_rule: {self.label_rule!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _calibrate_intercept(logit: np.ndarray, target: float) -> float:
    """Bisect b so that mean sigmoid(logit + b) == target."""
    lo, hi = -30.0, 30.0
    for _ in range(80):
        mid = (lo + hi) / 2.0
        if _sigmoid(logit + mid).mean() < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def generate_synthetic(config: SyntheticConfig, seed: int) -> PeriodizedDataset:
    """Generate a periodized dataset from a sparse logistic model.

    Labels are Bernoulli draws from a sigmoid over the informative
    features; the intercept is calibrated per period so the mean
    probability hits positive_rate. Each period is guaranteed to contain
    both classes. Deterministic given (config, seed).
    """
    k = config.informative
    signs = np.where(np.arange(k) % 2 == 0, 1.0, -1.0)
    base = config.base_coef * (config.dominance ** np.arange(k)) * signs
    drift_dir = np.where(np.arange(k) % 2 == 0, 1.0, -1.0)

    periods = []
    for t in range(config.periods):
        rng = np.random.Generator(
            np.random.PCG64(derive_seed(seed, ("synth", t)))
        )
        x = rng.standard_normal((config.rows_per_period, config.features))
        if config.quantized:
            x[:, : config.quantized] = np.round(x[:, : config.quantized] * 2.0) / 2.0
        coef = base * (1.0 + config.drift * t * drift_dir)
        informative = x[:, :k]
        if config.label_rule == "linear":
            logit = informative @ coef
        else:
            logit = 0.25 * (informative @ coef)
            for pair in range(k // 2):
                i, j = 2 * pair, 2 * pair + 1
                logit = logit + (
                    config.base_coef
                    * (config.dominance**pair)
                    * informative[:, i]
                    * informative[:, j]
                )
        intercept = _calibrate_intercept(logit, config.positive_rate)
        prob = _sigmoid(logit + intercept)
        labels = (rng.uniform(size=config.rows_per_period) < prob).astype(np.int64)
        # every period must be usable for training: force both classes
        if labels.sum() == 0:
            labels[int(np.argmax(prob))] = 1
        elif labels.sum() == labels.size:
            labels[int(np.argmin(prob))] = 0
        periods.append(Period(period_index=t, features=x, labels=labels))

    names = tuple(f"f{j}" for j in range(config.features))
    return PeriodizedDataset(feature_names=names, periods=tuple(periods))
