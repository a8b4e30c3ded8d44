"""Experiment runners: internal, external, and time consistency.

Every stochastic step in every runner draws from a seed derived from the
master seed and a label tuple naming the cell, so parallel and serial
execution produce identical reports. "Free" seeds incorporate the
iteration index; "fixed" seeds omit it.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._kernels import BACKEND
from ._seeds import derive_seed
from .breaks import elbow_scan, jenks_breaks, rank_clusters_by_performance
from .data import (
    Period,
    PeriodizedDataset,
    SyntheticConfig,
    apply_scaler,
    bootstrap_sample,
    downsample_majority,
    fit_scaler,
    generate_synthetic,
    load_periodized_csv,
    scale_features,
)
from .interpret import permutation_importance, rank_features
from .learners import (
    ALL_LEARNERS,
    LearnerKind,
    SeedMode,
    SeedPolicy,
    SeedSpec,
    default_hyperparams,
    fit,
    predict_proba,
    random_search,
)
from .metrics import auc, kendalls_tau, kendalls_w, top_k_overlap
from .stats import bonferroni, cliffs_delta, kruskal_wallis, wilcoxon_rank_sum
from .strategies import (
    Ensemble,
    LearnerSpec,
    StrategyKind,
    StrategySeeds,
    ensemble_predict,
    ensemble_to_json,
    run_strategy,
)

__all__ = [
    "ExperimentConfig",
    "ConsistencyCell",
    "GroundTruth",
    "Rq2Report",
    "Rq3Report",
    "derive_seed",
    "load_dataset",
    "run_rq1",
    "run_rq2",
    "run_rq3",
    "run_elbow",
    "emit_reports",
]

ALL_STRATEGIES = (
    StrategyKind.SLIDING_WINDOW,
    StrategyKind.FULL_HISTORY,
    StrategyKind.SEA,
    StrategyKind.AWE,
)

_CONFIG_KEYS = {
    "csv",
    "synthetic",
    "learners",
    "iterations",
    "master_seed",
    "k_clusters",
    "top_k",
    "negligible",
    "n_iter",
    "downsample_ratio",
    "output_dir",
    "importance_repeats",
    "experiments",
    "capacity",
}

_CSV_KEYS = {"path", "label_column", "period_column"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration (JSON keys reject unknowns)."""

    csv: dict | None = None
    synthetic: dict | None = None
    learners: tuple = ALL_LEARNERS
    iterations: int = 10
    master_seed: int = 0
    k_clusters: int = 3
    top_k: tuple = (3, 5)
    negligible: float = 0.0001
    n_iter: int = 100
    downsample_ratio: float = 10.0
    output_dir: str = "reports"
    importance_repeats: int = 5
    experiments: tuple = (1, 2, 3, 4)
    capacity: int | None = None

    def __post_init__(self):
        if (self.csv is None) == (self.synthetic is None):
            raise ValueError("config needs exactly one of 'csv' or 'synthetic'")
        if self.csv is not None:
            unknown = set(self.csv) - _CSV_KEYS
            if unknown:
                raise ValueError(f"unknown csv keys: {sorted(unknown)}")
            missing = _CSV_KEYS - set(self.csv)
            if missing:
                raise ValueError(f"missing csv keys: {sorted(missing)}")
        if self.iterations < 2:
            raise ValueError("iterations must be >= 2 to measure agreement")
        if self.k_clusters < 2:
            raise ValueError("k_clusters must be >= 2")
        if not self.learners:
            raise ValueError("at least one learner required")
        learners = tuple(
            l if isinstance(l, LearnerKind) else LearnerKind.parse(l)
            for l in self.learners
        )
        object.__setattr__(self, "learners", learners)
        object.__setattr__(self, "top_k", tuple(int(k) for k in self.top_k))
        experiments = tuple(int(e) for e in self.experiments)
        if any(e not in (1, 2, 3, 4) for e in experiments):
            raise ValueError("experiments must be a subset of {1,2,3,4}")
        object.__setattr__(self, "experiments", experiments)
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if not self.downsample_ratio > 0:
            raise ValueError("downsample_ratio must be > 0")
        if self.importance_repeats < 1:
            raise ValueError("importance_repeats must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self) -> dict:
        return {
            "csv": self.csv,
            "synthetic": self.synthetic,
            "learners": [l.value for l in self.learners],
            "iterations": self.iterations,
            "master_seed": self.master_seed,
            "k_clusters": self.k_clusters,
            "top_k": list(self.top_k),
            "negligible": self.negligible,
            "n_iter": self.n_iter,
            "downsample_ratio": self.downsample_ratio,
            "output_dir": self.output_dir,
            "importance_repeats": self.importance_repeats,
            "experiments": list(self.experiments),
            "capacity": self.capacity,
        }


def load_dataset(config: ExperimentConfig) -> PeriodizedDataset:
    if config.csv is not None:
        return load_periodized_csv(
            config.csv["path"], config.csv["label_column"], config.csv["period_column"]
        )
    raw = dict(config.synthetic)
    seed = raw.pop("seed", 0)
    return generate_synthetic(SyntheticConfig(**raw), seed)


@dataclass(frozen=True)
class ConsistencyCell:
    """Agreement of one learner's interpretations within one period."""

    learner: str
    period: int
    experiment: int
    kendalls_w: float
    overlaps: dict
    aucs: tuple

    @property
    def top3_overlap(self):
        return self.overlaps.get(3)

    @property
    def top5_overlap(self):
        return self.overlaps.get(5)


@dataclass(frozen=True)
class GroundTruth:
    period: int
    best_model: dict
    best_auc: float
    ranking: np.ndarray


@dataclass(frozen=True)
class Rq2Report:
    models: list
    clusters: list
    tests: list
    converge: list
    top_learner: list
    included_periods: tuple
    k_clusters: int


@dataclass(frozen=True)
class Rq3Report:
    test_models: list
    ground_truths: list
    taus: list
    kw_statistic: float
    kw_p_value: float
    pairwise: list
    ensembles: dict


# Table of controlled-randomness rows: experiment id -> SeedPolicy
RQ1_POLICIES = {
    1: SeedPolicy(SeedSpec.free(), SeedSpec.disabled(), None),
    2: SeedPolicy(SeedSpec(SeedMode.FIXED), SeedSpec.free(), None),
    3: SeedPolicy(SeedSpec(SeedMode.FIXED), SeedSpec.disabled(), SeedSpec.free()),
    4: SeedPolicy(SeedSpec(SeedMode.FIXED), SeedSpec.disabled(), None),
}


# ---------------------------------------------------------------------------
# worker plumbing: dataset + params are installed once per process

_STATE: dict = {}


def _init_worker(dataset, params):
    _STATE["dataset"] = dataset
    _STATE["params"] = params


def _map_tasks(fn, specs, jobs, dataset, params):
    """Run task fn over specs, serially or on a process pool, in order."""
    specs = list(specs)
    if jobs <= 1 or len(specs) <= 1:
        _init_worker(dataset, params)
        return [fn(spec) for spec in specs]
    chunk = max(1, len(specs) // (jobs * 4))
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=(dataset, params)
    ) as pool:
        return list(pool.map(fn, specs, chunksize=chunk))


def _prepare_train(period: Period, ratio: float, down_seed: int, boot_seed):
    """Downsample, optionally bootstrap, then standardize one training set."""
    rows = downsample_majority(period, ratio, down_seed)
    if boot_seed is not None:
        rows = bootstrap_sample(rows, boot_seed, require_both_classes=True)
    scaler = fit_scaler(rows)
    return apply_scaler(scaler, rows), scaler


def _evaluate(model, scaler, test_period: Period, params):
    """Next-period AUC plus permutation importance and ranking."""
    test = apply_scaler(scaler, test_period)
    probs = predict_proba(model, test.features)
    score = auc(test.labels, probs)
    importances = permutation_importance(
        lambda m: predict_proba(model, m),
        test,
        params["importance_repeats"],
        params["importance_seed"],
    )
    return score, importances, rank_features(importances).rank


# ---------------------------------------------------------------------------
# RQ1: internal consistency under controlled randomness


def _resolve_seed(spec: SeedSpec, master: int, base: tuple, iteration: int, tag: str):
    if spec.mode is SeedMode.DISABLED:
        return None
    if spec.mode is SeedMode.FREE:
        return derive_seed(master, base + (iteration, tag))
    return derive_seed(master, base + (tag,))


def _rq1_task(spec):
    experiment, learner_value, period_index = spec
    dataset: PeriodizedDataset = _STATE["dataset"]
    params = _STATE["params"]
    master = params["master_seed"]
    kind = LearnerKind(learner_value)
    policy = RQ1_POLICIES[experiment]
    base = ("rq1", experiment, learner_value, period_index)

    raw = downsample_majority(
        dataset.periods[period_index],
        params["downsample_ratio"],
        derive_seed(master, base + ("down",)),
    )
    test_period = dataset.periods[period_index + 1]

    aucs = []
    score_sets = []
    rankings = []
    for i in range(params["iterations"]):
        learner_seed = _resolve_seed(policy.learner_seed, master, base, i, "learner")
        boot_seed = (
            _resolve_seed(policy.sampling, master, base, i, "boot")
            if policy.sampling is not None
            else None
        )
        rows = raw
        if boot_seed is not None:
            rows = bootstrap_sample(rows, boot_seed, require_both_classes=True)
        scaler = fit_scaler(rows)
        train = apply_scaler(scaler, rows)

        search_seed = _resolve_seed(policy.search_seed, master, base, i, "search")
        if search_seed is not None:
            hyperparams = random_search(
                kind, train, params["n_iter"], search_seed, learner_seed
            )
        else:
            hyperparams = default_hyperparams(kind)
        model = fit(kind, train, hyperparams, learner_seed)

        score, importances, rank_vec = _evaluate(model, scaler, test_period, params)
        aucs.append(score)
        score_sets.append(importances.values)
        rankings.append(rank_vec)

    overlaps = {
        k: top_k_overlap(score_sets, k, params["negligible"]) for k in params["top_k"]
    }
    return {
        "experiment": experiment,
        "learner": learner_value,
        "period": period_index,
        "kendalls_w": kendalls_w(rankings),
        "overlaps": overlaps,
        "aucs": tuple(aucs),
    }


def run_rq1(config: ExperimentConfig, dataset: PeriodizedDataset | None = None,
            jobs: int = 1):
    """Internal consistency: per learner x period x experiment, agreement
    of the interpretations across `iterations` controlled retrainings."""
    if dataset is None:
        dataset = load_dataset(config)
    if dataset.n_periods < 2:
        raise ValueError("rq1 needs at least 2 periods")
    params = _shared_params(config)
    specs = [
        (e, kind.value, t)
        for e in config.experiments
        for kind in config.learners
        for t in range(dataset.n_periods - 1)
    ]
    records = _map_tasks(_rq1_task, specs, jobs, dataset, params)
    return [
        ConsistencyCell(
            learner=r["learner"],
            period=r["period"],
            experiment=r["experiment"],
            kendalls_w=r["kendalls_w"],
            overlaps=r["overlaps"],
            aucs=r["aucs"],
        )
        for r in records
    ]


# ---------------------------------------------------------------------------
# RQ2: external consistency across performance clusters


def _rq2_task(spec):
    period_index, learner_value, iteration = spec
    dataset: PeriodizedDataset = _STATE["dataset"]
    params = _STATE["params"]
    master = params["master_seed"]
    kind = LearnerKind(learner_value)
    base = ("rq2", learner_value, period_index)

    train, scaler = _prepare_train(
        dataset.periods[period_index],
        params["downsample_ratio"],
        derive_seed(master, base + ("down",)),
        derive_seed(master, base + (iteration, "boot")),
    )
    learner_seed = derive_seed(master, base + (iteration, "learner"))
    hyperparams = random_search(
        kind, train, params["n_iter"],
        derive_seed(master, base + (iteration, "search")), learner_seed,
    )
    model = fit(kind, train, hyperparams, learner_seed)
    score, importances, rank_vec = _evaluate(
        model, scaler, dataset.periods[period_index + 1], params
    )
    return {
        "period": period_index,
        "learner": learner_value,
        "iteration": iteration,
        "auc": score,
        "scores": importances.values,
        "rank": rank_vec,
    }


def run_rq2(config: ExperimentConfig, dataset: PeriodizedDataset | None = None,
            jobs: int = 1) -> Rq2Report:
    """External consistency: cluster each period's models by AUC and
    measure interpretation agreement within and between clusters."""
    if dataset is None:
        dataset = load_dataset(config)
    if dataset.n_periods < 2:
        raise ValueError("rq2 needs at least 2 periods")
    models_per_period = len(config.learners) * config.iterations
    if config.k_clusters > models_per_period:
        raise ValueError("k_clusters exceeds the models per period")
    params = _shared_params(config)
    specs = [
        (t, kind.value, i)
        for t in range(dataset.n_periods - 1)
        for kind in config.learners
        for i in range(config.iterations)
    ]
    records = _map_tasks(_rq2_task, specs, jobs, dataset, params)

    by_period: dict = {}
    for record in records:
        by_period.setdefault(record["period"], []).append(record)

    clusters = []
    model_rows = []
    converge = []
    top_learner = []
    included_periods = []
    w_by_rank: dict = {}
    overlap_by_rank: dict = {}

    for t in sorted(by_period):
        group = by_period[t]
        aucs = np.array([g["auc"] for g in group])
        result = jenks_breaks(aucs, config.k_clusters)
        assignment = np.asarray(result.assignment)
        ranks = rank_clusters_by_performance(result, aucs)
        sizes = [int((assignment == c).sum()) for c in range(config.k_clusters)]
        included = all(size >= 2 for size in sizes)
        if included:
            included_periods.append(t)

        for g, cluster in zip(group, assignment):
            model_rows.append(
                {
                    "period": t,
                    "learner": g["learner"],
                    "iteration": g["iteration"],
                    "auc": g["auc"],
                    "cluster_rank": ranks[cluster],
                }
            )

        for cluster in range(config.k_clusters):
            members = [g for g, c in zip(group, assignment) if c == cluster]
            rank = ranks[cluster]
            if len(members) >= 2:
                w_value = kendalls_w([m["rank"] for m in members])
                overlaps = {
                    k: top_k_overlap(
                        [m["scores"] for m in members], k, config.negligible
                    )
                    for k in config.top_k
                }
            else:
                w_value = None
                overlaps = {k: None for k in config.top_k}
            median_auc = float(np.median([m["auc"] for m in members])) if members else None
            clusters.append(
                {
                    "period": t,
                    "cluster_rank": rank,
                    "size": len(members),
                    "median_auc": median_auc,
                    "kendalls_w": w_value,
                    "overlaps": overlaps,
                    "included": included,
                }
            )
            if included:
                w_by_rank.setdefault(rank, []).append(w_value)
                for k in config.top_k:
                    overlap_by_rank.setdefault((k, rank), []).append(overlaps[k])
                converge.append(
                    {"period": t, "cluster_rank": rank, "median_auc": median_auc,
                     "kendalls_w": w_value}
                )
                if rank == 1:
                    for kind in config.learners:
                        share = sum(
                            1 for m in members if m["learner"] == kind.value
                        ) / len(members)
                        top_learner.append(
                            {"period": t, "learner": kind.value, "share": share}
                        )

    tests = []
    measurements = [("kendalls_w", w_by_rank)] + [
        (f"top{k}_overlap", {r: overlap_by_rank.get((k, r), []) for r in range(1, config.k_clusters + 1)})
        for k in config.top_k
    ]
    for name, by_rank in measurements:
        best = by_rank.get(1, [])
        raw_rows = []
        for rank in range(2, config.k_clusters + 1):
            other = by_rank.get(rank, [])
            if len(best) < 2 or len(other) < 2:
                continue
            test = wilcoxon_rank_sum(best, other, "greater")
            effect = cliffs_delta(best, other)
            raw_rows.append((rank, test.p_value, effect))
        # family size stays k-1 even when degenerate rows are skipped
        family = config.k_clusters - 1
        for rank, p_value, effect in raw_rows:
            cp = min(1.0, p_value * family)
            tests.append(
                {
                    "measurement": name,
                    "rank_x": 1,
                    "rank_y": rank,
                    "p_value": p_value,
                    "corrected_p": cp,
                    "cliffs_d": effect.d,
                    "magnitude": effect.magnitude.value,
                }
            )

    return Rq2Report(
        models=model_rows,
        clusters=clusters,
        tests=tests,
        converge=converge,
        top_learner=top_learner,
        included_periods=tuple(included_periods),
        k_clusters=config.k_clusters,
    )


def run_elbow(config: ExperimentConfig, dataset: PeriodizedDataset | None = None,
              jobs: int = 1, k_max: int = 8):
    """Per-period WSS curves over the RQ2 model AUCs, for choosing k."""
    if dataset is None:
        dataset = load_dataset(config)
    params = _shared_params(config)
    specs = [
        (t, kind.value, i)
        for t in range(dataset.n_periods - 1)
        for kind in config.learners
        for i in range(config.iterations)
    ]
    records = _map_tasks(_rq2_task, specs, jobs, dataset, params)
    by_period: dict = {}
    for record in records:
        by_period.setdefault(record["period"], []).append(record["auc"])
    rows = []
    for t in sorted(by_period):
        aucs = by_period[t]
        top = min(k_max, len(aucs))
        for k, wss in elbow_scan(aucs, top):
            rows.append({"period": t, "k": k, "wss": wss})
    return rows


# ---------------------------------------------------------------------------
# RQ3: time consistency across model-update strategies


def _strategy_seeds(master: int, base: tuple, iteration: int) -> StrategySeeds:
    return StrategySeeds(
        learner_seed=derive_seed(master, base + (iteration, "learner")),
        sampling_seed=derive_seed(master, base + (iteration, "boot")),
        downsample_seed=derive_seed(master, base + ("down",)),
        cv_seed=derive_seed(master, base + (iteration, "cv")),
    )


def _fit_strategy_artifact(dataset, params, strategy_value, learner_value,
                           iteration, base, target_period):
    kind = LearnerKind(learner_value)
    spec = LearnerSpec(
        kind=kind,
        hyperparams=default_hyperparams(kind),
        downsample_ratio=params["downsample_ratio"],
    )
    seeds = _strategy_seeds(params["master_seed"], base, iteration)
    return run_strategy(
        StrategyKind(strategy_value), dataset, spec, target_period, seeds,
        capacity=params["capacity"],
    )


def _artifact_predictor(artifact):
    if isinstance(artifact, Ensemble):
        return lambda features: ensemble_predict(artifact, features)
    return artifact.predict


def _fit_single_candidate(dataset, params, period_index, learner_value, iteration, base):
    """One next-period candidate: bootstrap + randomized search on period t."""
    master = params["master_seed"]
    kind = LearnerKind(learner_value)
    train, scaler = _prepare_train(
        dataset.periods[period_index],
        params["downsample_ratio"],
        derive_seed(master, base + ("down",)),
        derive_seed(master, base + (iteration, "boot")),
    )
    learner_seed = derive_seed(master, base + (iteration, "learner"))
    hyperparams = random_search(
        kind, train, params["n_iter"],
        derive_seed(master, base + (iteration, "search")), learner_seed,
    )
    model = fit(kind, train, hyperparams, learner_seed)

    def predictor(features):
        return predict_proba(model, scale_features(scaler, features))

    return predictor


def _rq3_task(spec):
    dataset: PeriodizedDataset = _STATE["dataset"]
    params = _STATE["params"]
    kind = spec[0]
    if kind == "test":
        _, strategy_value, learner_value, iteration = spec
        base = ("rq3", "test", strategy_value, learner_value)
        target = dataset.n_periods - 1
        try:
            artifact = _fit_strategy_artifact(
                dataset, params, strategy_value, learner_value, iteration, base, target
            )
            probs = _artifact_predictor(artifact)(dataset.periods[target].features)
        except ValueError as exc:
            if "empty ensemble" in str(exc):
                return spec, None
            raise
        return spec, auc(dataset.periods[target].labels, probs)
    if kind == "gt_single":
        _, period_index, learner_value, iteration = spec
        base = ("rq3", "gt", period_index, learner_value)
        predictor = _fit_single_candidate(
            dataset, params, period_index, learner_value, iteration, base
        )
        nxt = dataset.periods[period_index + 1]
        return spec, auc(nxt.labels, predictor(nxt.features))
    _, period_index, strategy_value, learner_value, iteration = spec
    base = ("rq3", "gt", period_index, strategy_value, learner_value)
    try:
        artifact = _fit_strategy_artifact(
            dataset, params, strategy_value, learner_value, iteration, base,
            period_index + 1,
        )
        nxt = dataset.periods[period_index + 1]
        probs = _artifact_predictor(artifact)(nxt.features)
    except ValueError as exc:
        if "empty ensemble" in str(exc):
            return spec, None
        raise
    return spec, auc(dataset.periods[period_index + 1].labels, probs)


def _interpret_raw(predictor, period: Period, params):
    importances = permutation_importance(
        predictor, period, params["importance_repeats"], params["importance_seed"]
    )
    return importances, rank_features(importances).rank


def run_rq3(config: ExperimentConfig, dataset: PeriodizedDataset | None = None,
            jobs: int = 1) -> Rq3Report:
    """Time consistency: per-strategy test models vs per-period ground
    truths, compared by Kendall's Tau and rank-based tests."""
    if dataset is None:
        dataset = load_dataset(config)
    n = dataset.n_periods
    if n < 4:
        raise ValueError("rq3 needs at least 4 periods")
    window = n // 2
    params = _shared_params(config)
    strategy_values = [s.value for s in ALL_STRATEGIES]
    learner_values = [l.value for l in config.learners]
    gt_periods = list(range(window, n - 1))

    specs = [
        ("test", s, l, i)
        for s in strategy_values
        for l in learner_values
        for i in range(config.iterations)
    ]
    specs += [
        ("gt_single", t, l, i)
        for t in gt_periods
        for l in learner_values
        for i in range(config.iterations)
    ]
    specs += [
        ("gt_strategy", t, s, l, i)
        for t in gt_periods
        for s in strategy_values
        for l in learner_values
        for i in range(config.iterations)
    ]
    results = dict(_map_tasks(_rq3_task, specs, jobs, dataset, params))

    # Step 1 winners: best next-period AUC per strategy, first wins ties
    test_models = []
    test_rankings = {}
    ensembles = {}
    final_period = dataset.periods[n - 1]
    for s in strategy_values:
        best = None
        for l in learner_values:
            for i in range(config.iterations):
                score = results[("test", s, l, i)]
                if score is None:
                    continue
                if best is None or score > best[0]:
                    best = (score, l, i)
        if best is None:
            raise RuntimeError(f"strategy {s} produced no usable test model")
        score, l, i = best
        artifact = _fit_strategy_artifact(
            dataset, params, s, l, i, ("rq3", "test", s, l), n - 1
        )
        importances, rank_vec = _interpret_raw(
            _artifact_predictor(artifact), final_period, params
        )
        test_rankings[s] = rank_vec
        if isinstance(artifact, Ensemble):
            ensembles[s] = ensemble_to_json(artifact)
            members = len(artifact.members)
        else:
            members = None
        test_models.append(
            {"strategy": s, "learner": l, "iteration": i, "auc": score,
             "members": members}
        )

    # Step 2 winners: best candidate per period over singles then strategies
    ground_truths = []
    for t in gt_periods:
        best = None
        for l in learner_values:
            for i in range(config.iterations):
                score = results[("gt_single", t, l, i)]
                if best is None or score > best[0]:
                    best = (score, {"source": "single", "strategy": None,
                                    "learner": l, "iteration": i})
        for s in strategy_values:
            for l in learner_values:
                for i in range(config.iterations):
                    score = results[("gt_strategy", t, s, l, i)]
                    if score is None:
                        continue
                    if score > best[0]:
                        best = (score, {"source": "strategy", "strategy": s,
                                        "learner": l, "iteration": i})
        score, descriptor = best
        if descriptor["source"] == "single":
            predictor = _fit_single_candidate(
                dataset, params, t, descriptor["learner"], descriptor["iteration"],
                ("rq3", "gt", t, descriptor["learner"]),
            )
        else:
            artifact = _fit_strategy_artifact(
                dataset, params, descriptor["strategy"], descriptor["learner"],
                descriptor["iteration"],
                ("rq3", "gt", t, descriptor["strategy"], descriptor["learner"]),
                t + 1,
            )
            predictor = _artifact_predictor(artifact)
        _, rank_vec = _interpret_raw(predictor, dataset.periods[t + 1], params)
        ground_truths.append(
            GroundTruth(period=t, best_model=descriptor, best_auc=score,
                        ranking=rank_vec)
        )

    # Step 3: Tau of each test model against every ground truth
    taus = []
    tau_lists = {}
    for s in strategy_values:
        values = []
        for gt in ground_truths:
            tau, label = kendalls_tau(test_rankings[s], gt.ranking)
            values.append(tau)
            taus.append(
                {"strategy": s, "period": gt.period, "tau": tau,
                 "agreement": label.value}
            )
        tau_lists[s] = values

    kw = kruskal_wallis([tau_lists[s] for s in strategy_values])

    pairwise = []
    for s in strategy_values:
        others = [o for o in strategy_values if o != s]
        raw = [
            (o,
             wilcoxon_rank_sum(tau_lists[s], tau_lists[o], "greater").p_value,
             cliffs_delta(tau_lists[s], tau_lists[o]))
            for o in others
        ]
        corrected = bonferroni([r[1] for r in raw])
        for (o, p_value, effect), cp in zip(raw, corrected):
            pairwise.append(
                {
                    "update_approach": s,
                    "versus": o,
                    "p_value": p_value,
                    "corrected_p": cp,
                    "cliffs_d": effect.d,
                    "magnitude": effect.magnitude.value,
                }
            )

    return Rq3Report(
        test_models=test_models,
        ground_truths=ground_truths,
        taus=taus,
        kw_statistic=kw.statistic,
        kw_p_value=kw.p_value,
        pairwise=pairwise,
        ensembles=ensembles,
    )


def _shared_params(config: ExperimentConfig) -> dict:
    return {
        "master_seed": config.master_seed,
        "iterations": config.iterations,
        "downsample_ratio": config.downsample_ratio,
        "n_iter": config.n_iter,
        "negligible": config.negligible,
        "top_k": config.top_k,
        "importance_repeats": config.importance_repeats,
        "importance_seed": derive_seed(config.master_seed, ("importance",)),
        "capacity": config.capacity,
    }


# ---------------------------------------------------------------------------
# report emission


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, np.floating):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows):
    import csv as _csv

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = _csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def emit_reports(results: dict, output_dir) -> list:
    """Write CSV tables + a JSON manifest; returns the written paths.

    results maps section names ("rq1", "rq2", "rq3", "elbow") to runner
    outputs and must carry the ExperimentConfig under "config". Reruns
    with an identical config produce byte-identical files.
    """
    config: ExperimentConfig = results["config"]
    os.makedirs(output_dir, exist_ok=True)
    written = []

    def emit(name, header, rows):
        path = os.path.join(output_dir, name)
        _write_csv(path, header, rows)
        written.append(name)

    if "rq1" in results:
        cells = results["rq1"]
        overlap_cols = [f"top{k}_overlap" for k in config.top_k]
        emit(
            "rq1_cells.csv",
            ["experiment", "learner", "period", "kendalls_w"] + overlap_cols,
            [
                [c.experiment, c.learner, c.period, c.kendalls_w]
                + [c.overlaps[k] for k in config.top_k]
                for c in cells
            ],
        )
        emit(
            "rq1_aucs.csv",
            ["experiment", "learner", "period", "iteration", "auc"],
            [
                [c.experiment, c.learner, c.period, i, a]
                for c in cells
                for i, a in enumerate(c.aucs)
            ],
        )
        summary_rows = []
        for e in config.experiments:
            for kind in config.learners:
                mine = [c for c in cells if c.experiment == e and c.learner == kind.value]
                if not mine:
                    continue
                summary_rows.append(
                    [e, kind.value, float(np.median([c.kendalls_w for c in mine]))]
                    + [
                        float(np.median([c.overlaps[k] for c in mine]))
                        for k in config.top_k
                    ]
                )
        emit(
            "rq1_summary.csv",
            ["experiment", "learner", "median_w"]
            + [f"median_top{k}" for k in config.top_k],
            summary_rows,
        )

    if "rq2" in results:
        report: Rq2Report = results["rq2"]
        emit(
            "rq2_models.csv",
            ["period", "learner", "iteration", "auc", "cluster_rank"],
            [
                [m["period"], m["learner"], m["iteration"], m["auc"], m["cluster_rank"]]
                for m in report.models
            ],
        )
        overlap_cols = [f"top{k}_overlap" for k in config.top_k]
        emit(
            "rq2_clusters.csv",
            ["period", "cluster_rank", "size", "median_auc", "kendalls_w"]
            + overlap_cols
            + ["included"],
            [
                [c["period"], c["cluster_rank"], c["size"], c["median_auc"],
                 c["kendalls_w"]]
                + [c["overlaps"][k] for k in config.top_k]
                + [c["included"]]
                for c in report.clusters
            ],
        )
        emit(
            "rq2_tests.csv",
            ["measurement", "rank_x", "rank_y", "p_value", "corrected_p",
             "cliffs_d", "magnitude"],
            [
                [t["measurement"], t["rank_x"], t["rank_y"], t["p_value"],
                 t["corrected_p"], t["cliffs_d"], t["magnitude"]]
                for t in report.tests
            ],
        )
        emit(
            "rq2_converge.csv",
            ["period", "cluster_rank", "median_auc", "kendalls_w"],
            [
                [c["period"], c["cluster_rank"], c["median_auc"], c["kendalls_w"]]
                for c in report.converge
            ],
        )
        emit(
            "rq2_top_learner.csv",
            ["period", "learner", "share"],
            [[r["period"], r["learner"], r["share"]] for r in report.top_learner],
        )

    if "elbow" in results:
        emit(
            "elbow.csv",
            ["period", "k", "wss"],
            [[r["period"], r["k"], r["wss"]] for r in results["elbow"]],
        )

    if "rq3" in results:
        report: Rq3Report = results["rq3"]
        emit(
            "rq3_test_models.csv",
            ["strategy", "learner", "iteration", "auc", "members"],
            [
                [m["strategy"], m["learner"], m["iteration"], m["auc"], m["members"]]
                for m in report.test_models
            ],
        )
        emit(
            "rq3_ground_truth.csv",
            ["period", "source", "strategy", "learner", "iteration", "best_auc"],
            [
                [g.period, g.best_model["source"], g.best_model["strategy"],
                 g.best_model["learner"], g.best_model["iteration"], g.best_auc]
                for g in report.ground_truths
            ],
        )
        emit(
            "rq3_tau.csv",
            ["strategy", "period", "tau", "agreement"],
            [[t["strategy"], t["period"], t["tau"], t["agreement"]] for t in report.taus],
        )
        emit(
            "rq3_kw.csv",
            ["statistic", "p_value"],
            [[report.kw_statistic, report.kw_p_value]],
        )
        emit(
            "rq3_pairwise.csv",
            ["update_approach", "versus", "p_value", "corrected_p", "cliffs_d",
             "magnitude"],
            [
                [p["update_approach"], p["versus"], p["p_value"], p["corrected_p"],
                 p["cliffs_d"], p["magnitude"]]
                for p in report.pairwise
            ],
        )
        path = os.path.join(output_dir, "rq3_ensembles.json")
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(report.ensembles, handle, indent=2, sort_keys=True)
            handle.write("\n")
        written.append("rq3_ensembles.json")

    manifest = {
        "master_seed": config.master_seed,
        "config": config.to_dict(),
        "version": __version__,
        "backend": BACKEND,
        "reports": sorted(written),
    }
    manifest_path = os.path.join(output_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    written.append("manifest.json")
    return [os.path.join(output_dir, name) for name in written]
