"""Model-update approaches: sliding window, full history, SEA, AWE.

The two retraining approaches produce a single model over a window of
history; the two ensemble approaches fold periods through an update rule,
carrying members trained on individual periods. Every member bundles the
scaler fitted on its own training rows, so ensembles accept raw feature
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from ._seeds import derive_seed
from .data import (
    Period,
    PeriodizedDataset,
    Scaler,
    apply_scaler,
    bootstrap_sample,
    downsample_majority,
    fit_scaler,
    scale_features,
)
from .learners import FittedModel, HyperparamSet, LearnerKind, fit, predict_proba
from .metrics import mse

__all__ = [
    "StrategyKind",
    "LearnerSpec",
    "StrategySeeds",
    "ScaledModel",
    "EnsembleMember",
    "Ensemble",
    "sliding_window_train_set",
    "full_history_train_set",
    "sea_update",
    "awe_update",
    "ensemble_predict",
    "run_strategy",
    "ensemble_to_json",
]

REFERENCE_MSE = 0.25  # a random guesser's Brier score; AWE weight = this minus MSE


class StrategyKind(Enum):
    SLIDING_WINDOW = "SlidingWindow"
    FULL_HISTORY = "FullHistory"
    SEA = "Sea"
    AWE = "Awe"

    @classmethod
    def parse(cls, text: str) -> "StrategyKind":
        aliases = {
            "sw": cls.SLIDING_WINDOW,
            "slidingwindow": cls.SLIDING_WINDOW,
            "fh": cls.FULL_HISTORY,
            "fullhistory": cls.FULL_HISTORY,
            "sea": cls.SEA,
            "awe": cls.AWE,
        }
        key = text.strip().lower()
        if key not in aliases:
            raise ValueError(f"unknown strategy: {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class LearnerSpec:
    """Recipe for training one member model."""

    kind: LearnerKind
    hyperparams: HyperparamSet
    downsample_ratio: float | None = None


@dataclass(frozen=True)
class StrategySeeds:
    """Seed bundle for one strategy run; sub-seeds are derived per period."""

    learner_seed: int
    sampling_seed: int | None = None  # set to bootstrap member training rows
    downsample_seed: int = 0
    cv_seed: int = 0


@dataclass(frozen=True)
class ScaledModel:
    """A fitted model plus the scaler fitted on its training rows."""

    model: FittedModel
    scaler: Scaler
    trained_on: tuple

    def predict(self, features) -> np.ndarray:
        return predict_proba(self.model, scale_features(self.scaler, features))


@dataclass(frozen=True)
class EnsembleMember:
    model: FittedModel
    scaler: Scaler
    trained_on_period: int
    weight: float = 0.0

    def predict(self, features) -> np.ndarray:
        return predict_proba(self.model, scale_features(self.scaler, features))


@dataclass(frozen=True)
class Ensemble:
    kind: StrategyKind
    capacity: int
    members: tuple

    def __post_init__(self):
        if self.kind not in (StrategyKind.SEA, StrategyKind.AWE):
            raise ValueError("ensembles exist only for Sea and Awe")
        if len(self.members) > self.capacity:
            raise ValueError("ensemble exceeds capacity")


def _concat_periods(dataset: PeriodizedDataset, first: int, last: int, target: int) -> Period:
    """Rows of periods [first, last] stacked; period_index labels the target."""
    parts = dataset.periods[first : last + 1]
    return Period(
        period_index=target,
        features=np.concatenate([p.features for p in parts], axis=0),
        labels=np.concatenate([p.labels for p in parts]),
    )


def sliding_window_train_set(dataset: PeriodizedDataset, target_period: int) -> Period:
    """The ⌊n/2⌋ periods immediately preceding target_period, concatenated."""
    window = dataset.n_periods // 2
    if target_period < window:
        raise ValueError(
            f"target period {target_period} has fewer than {window} preceding periods"
        )
    return _concat_periods(dataset, target_period - window, target_period - 1, target_period)


def full_history_train_set(dataset: PeriodizedDataset, target_period: int) -> Period:
    """All periods before target_period, concatenated."""
    if target_period < 1:
        raise ValueError("full history needs at least one preceding period")
    return _concat_periods(dataset, 0, target_period - 1, target_period)


def _member_mse(member: EnsembleMember, period: Period) -> float:
    return mse(member.predict(period.features), period.labels)


def sea_update(ensemble: Ensemble, previous_model: EnsembleMember, new_period: Period) -> Ensemble:
    """Fold one period into a SEA ensemble.

    Below capacity the candidate (the model trained on the preceding
    period) is appended outright. At capacity it replaces the single
    worst member iff its MSE on the new period is strictly lower than
    that member's.
    """
    if ensemble.kind is not StrategyKind.SEA:
        raise ValueError("sea_update requires a Sea ensemble")
    if previous_model.trained_on_period >= new_period.period_index:
        raise ValueError("candidate must be trained strictly before the new period")
    if len(ensemble.members) < ensemble.capacity:
        return replace(ensemble, members=ensemble.members + (previous_model,))

    candidate_mse = _member_mse(previous_model, new_period)
    member_mses = [_member_mse(m, new_period) for m in ensemble.members]
    worst = int(np.argmax(member_mses))
    if candidate_mse < member_mses[worst]:
        members = list(ensemble.members)
        members[worst] = previous_model
        return replace(ensemble, members=tuple(members))
    return ensemble


def _stratified_folds(labels: np.ndarray, n_folds: int, seed: int):
    """Round-robin per-class fold assignment after a seeded shuffle."""
    rng = np.random.Generator(np.random.PCG64(seed))
    assignment = np.empty(labels.size, dtype=np.int64)
    for cls in (0, 1):
        members = np.nonzero(labels == cls)[0]
        members = members[rng.permutation(members.size)]
        assignment[members] = np.arange(members.size) % n_folds
    return assignment


def _cv_mse(period: Period, kind: LearnerKind, hyperparams: HyperparamSet,
            learner_seed: int, cv_seed: int) -> float:
    """Stratified k-fold CV MSE (k = 10, clamped to the class counts)."""
    labels = period.labels
    pos = int(labels.sum())
    neg = labels.size - pos
    n_folds = min(10, pos, neg)
    if n_folds < 2:
        raise ValueError("too few rows per class for cross-validation")
    assignment = _stratified_folds(labels, n_folds, cv_seed)
    fold_mses = []
    for fold in range(n_folds):
        train_rows = assignment != fold
        val_rows = ~train_rows
        train = Period(
            period_index=period.period_index,
            features=period.features[train_rows],
            labels=labels[train_rows],
        )
        scaler = fit_scaler(train)
        model = fit(kind, apply_scaler(scaler, train), hyperparams,
                    derive_seed(learner_seed, ("cv", fold)))
        val = Period(
            period_index=period.period_index,
            features=period.features[val_rows],
            labels=labels[val_rows],
        )
        probs = predict_proba(model, apply_scaler(scaler, val).features)
        fold_mses.append(mse(probs, val.labels))
    return float(np.mean(fold_mses))


def _prepare_member_train(dataset: PeriodizedDataset, period_index: int,
                          spec: LearnerSpec, seeds: StrategySeeds):
    """Downsample, optionally bootstrap, then scale one period's rows.

    Returns (train_for_fit, evaluation_period, scaler): evaluation uses the
    downsampled rows without the bootstrap resampling.
    """
    period = dataset.periods[period_index]
    if spec.downsample_ratio is not None:
        period = downsample_majority(
            period, spec.downsample_ratio,
            derive_seed(seeds.downsample_seed, ("down", period_index)),
        )
    evaluation = period
    if seeds.sampling_seed is not None:
        period = bootstrap_sample(
            period,
            derive_seed(seeds.sampling_seed, ("boot", period_index)),
            require_both_classes=True,
        )
    scaler = fit_scaler(period)
    return apply_scaler(scaler, period), evaluation, scaler


def _train_member(dataset: PeriodizedDataset, period_index: int,
                  spec: LearnerSpec, seeds: StrategySeeds) -> EnsembleMember:
    train, _, scaler = _prepare_member_train(dataset, period_index, spec, seeds)
    model = fit(spec.kind, train, spec.hyperparams,
                derive_seed(seeds.learner_seed, ("member", period_index)))
    return EnsembleMember(model=model, scaler=scaler, trained_on_period=period_index)


def awe_update(ensemble: Ensemble, dataset: PeriodizedDataset, new_period_index: int,
               learner_spec: LearnerSpec, seeds: StrategySeeds) -> Ensemble:
    """Fold one period into an AWE ensemble.

    The new model is trained on the new period and scored by stratified
    10-fold CV on it; existing members are scored directly on the new
    period. Every model is reweighted w = 0.25 - MSE; w <= 0 drops the
    model, and the lowest weights are pruned down to capacity.
    """
    if ensemble.kind is not StrategyKind.AWE:
        raise ValueError("awe_update requires an Awe ensemble")
    train, evaluation, scaler = _prepare_member_train(
        dataset, new_period_index, learner_spec, seeds
    )
    labels = evaluation.labels
    if labels.sum() in (0, labels.size):
        raise ValueError("new period is single-class")

    member_seed = derive_seed(seeds.learner_seed, ("member", new_period_index))
    model = fit(learner_spec.kind, train, learner_spec.hyperparams, member_seed)
    new_mse = _cv_mse(
        evaluation, learner_spec.kind, learner_spec.hyperparams,
        member_seed, derive_seed(seeds.cv_seed, ("cv", new_period_index)),
    )
    candidates = [
        EnsembleMember(model=model, scaler=scaler,
                       trained_on_period=new_period_index,
                       weight=REFERENCE_MSE - new_mse)
    ]
    for member in ensemble.members:
        candidates.append(
            replace(member, weight=REFERENCE_MSE - _member_mse(member, evaluation))
        )
    kept = [m for m in candidates if m.weight > 0]
    # highest weights survive; ties keep the older member
    kept.sort(key=lambda m: (-m.weight, m.trained_on_period))
    return replace(ensemble, members=tuple(kept[: ensemble.capacity]))


def ensemble_predict(ensemble: Ensemble, features) -> np.ndarray:
    """SEA: fraction of members voting positive (probability > 0.5).
    AWE: weight-normalized average of member probabilities."""
    if not ensemble.members:
        raise ValueError("cannot predict with an empty ensemble")
    stacked = np.stack([m.predict(features) for m in ensemble.members])
    if ensemble.kind is StrategyKind.SEA:
        return (stacked > 0.5).mean(axis=0)
    weights = np.array([m.weight for m in ensemble.members])
    return weights @ stacked / weights.sum()


def run_strategy(kind: StrategyKind, dataset: PeriodizedDataset, learner_spec: LearnerSpec,
                 target_period: int, seeds: StrategySeeds, capacity: int | None = None):
    """Produce the artifact a strategy would deploy against target_period.

    SlidingWindow/FullHistory return a ScaledModel fitted on their train
    window; Sea/Awe fold periods 0..target_period-1 through their update
    rule and return the resulting Ensemble.
    """
    window = dataset.n_periods // 2
    if target_period < window:
        raise ValueError(f"target period must be >= {window}")
    if capacity is None:
        capacity = window

    if kind in (StrategyKind.SLIDING_WINDOW, StrategyKind.FULL_HISTORY):
        if kind is StrategyKind.SLIDING_WINDOW:
            raw = sliding_window_train_set(dataset, target_period)
            first = target_period - window
        else:
            raw = full_history_train_set(dataset, target_period)
            first = 0
        if learner_spec.downsample_ratio is not None:
            raw = downsample_majority(
                raw, learner_spec.downsample_ratio,
                derive_seed(seeds.downsample_seed, ("down", target_period)),
            )
        if seeds.sampling_seed is not None:
            raw = bootstrap_sample(
                raw,
                derive_seed(seeds.sampling_seed, ("boot", target_period)),
                require_both_classes=True,
            )
        scaler = fit_scaler(raw)
        model = fit(learner_spec.kind, apply_scaler(scaler, raw), learner_spec.hyperparams,
                    derive_seed(seeds.learner_seed, ("member", target_period)))
        return ScaledModel(model=model, scaler=scaler,
                           trained_on=tuple(range(first, target_period)))

    if kind is StrategyKind.SEA:
        ensemble = Ensemble(kind=StrategyKind.SEA, capacity=capacity, members=())
        for k in range(1, target_period):
            candidate = _train_member(dataset, k - 1, learner_spec, seeds)
            _, evaluation, _ = _prepare_member_train(dataset, k, learner_spec, seeds)
            ensemble = sea_update(ensemble, candidate, evaluation)
        return ensemble

    ensemble = Ensemble(kind=StrategyKind.AWE, capacity=capacity, members=())
    for k in range(target_period):
        ensemble = awe_update(ensemble, dataset, k, learner_spec, seeds)
    return ensemble


def ensemble_to_json(ensemble: Ensemble) -> dict:
    """JSON-serializable summary for report auditing."""
    return {
        "kind": ensemble.kind.value,
        "capacity": ensemble.capacity,
        "members": [
            {
                "trained_on_period": m.trained_on_period,
                "weight": m.weight,
                "learner": m.model.kind.value,
                "hyperparams": {
                    k: v for k, v in m.model.hyperparams.values.items()
                },
                "default_hyperparams": m.model.hyperparams.default,
            }
            for m in ensemble.members
        ],
    }
