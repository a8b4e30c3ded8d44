"""Command-line entry points for the consistency experiment runners.

Every subcommand writes only inside the configured output directory.
Exit codes: 0 on success, 1 on a runtime error (message on stderr),
2 on a usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .data import (
    SyntheticConfig,
    apply_scaler,
    downsample_majority,
    fit_scaler,
    generate_synthetic,
    write_periodized_csv,
)
from .interpret import permutation_importance, rank_features
from .learners import (
    ALL_LEARNERS,
    LearnerKind,
    default_hyperparams,
    fit,
    predict_proba,
    search_space,
)
from .metrics import auc
from .pipeline import (
    ExperimentConfig,
    derive_seed,
    emit_reports,
    load_dataset,
    run_elbow,
    run_rq1,
    run_rq2,
    run_rq3,
)

__all__ = ["main"]


class CliError(Exception):
    """Raised for expected failures that should print and exit 1."""


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--master-seed", type=int, default=None,
                        help="override the config's master seed")
    parser.add_argument("--output-dir", default=None,
                        help="override the config's output directory")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: CPU count)")
    parser.add_argument("--learners", default=None,
                        help="comma-separated subset, e.g. lr,cart,rf,gbdt")
    parser.add_argument("--iterations", type=int, default=None,
                        help="override retrainings per cell")
    parser.add_argument("--k-clusters", type=int, default=None,
                        help="override the performance cluster count")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankstab",
        description="Consistency experiments for interpretations of "
        "temporally-partitioned binary classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rq1", help="internal consistency under controlled randomness")
    _add_common(p)
    p.add_argument("--experiments", default=None,
                   help="comma-separated subset of 1,2,3,4")

    p = sub.add_parser("rq2", help="external consistency across performance clusters")
    _add_common(p)

    p = sub.add_parser("rq3", help="time consistency across update strategies")
    _add_common(p)

    p = sub.add_parser("elbow", help="per-period WSS curves over model AUCs")
    _add_common(p)
    p.add_argument("--k-max", type=int, default=8)

    p = sub.add_parser("train", help="fit one learner on one period")
    _add_common(p)
    p.add_argument("--learner", required=True)
    p.add_argument("--period", type=int, required=True)

    p = sub.add_parser("interpret", help="permutation importance of one fit")
    _add_common(p)
    p.add_argument("--learner", required=True)
    p.add_argument("--period", type=int, required=True)

    p = sub.add_parser("spaces", help="print defaults and search spaces")
    p.add_argument("--output-dir", default=None,
                   help="also write spaces.json here")

    p = sub.add_parser("synth", help="generate a synthetic periodized CSV")
    p.add_argument("--periods", type=int, default=10)
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--features", type=int, default=6)
    p.add_argument("--informative", type=int, default=0,
                   help="informative feature count (0 = features//2)")
    p.add_argument("--positive-rate", type=float, default=0.09)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--dominance", type=float, default=0.5)
    p.add_argument("--quantized", type=int, default=0,
                   help="number of half-unit quantized feature columns")
    p.add_argument("--label-rule", choices=("linear", "nonlinear"), default="linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default="reports")
    p.add_argument("--name", default="synthetic.csv")
    return parser


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise CliError(f"--config is required for '{args.command}'")
    if not os.path.exists(args.config):
        raise CliError(f"config file not found: {args.config}")
    config = ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if args.learners:
        overrides["learners"] = tuple(
            part.strip() for part in args.learners.split(",") if part.strip()
        )
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.k_clusters is not None:
        overrides["k_clusters"] = args.k_clusters
    if getattr(args, "experiments", None):
        overrides["experiments"] = tuple(
            int(part) for part in args.experiments.split(",") if part.strip()
        )
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _single_fit(config: ExperimentConfig, dataset, kind: LearnerKind, period: int):
    """Shared train/interpret path: downsample, scale, fit defaults."""
    if not 0 <= period < dataset.n_periods:
        raise CliError(
            f"--period must be in [0, {dataset.n_periods - 1}], got {period}"
        )
    base = ("train", kind.value, period)
    master = config.master_seed
    rows = downsample_majority(
        dataset.periods[period],
        config.downsample_ratio,
        derive_seed(master, base + ("down",)),
    )
    scaler = fit_scaler(rows)
    train = apply_scaler(scaler, rows)
    model = fit(
        kind, train, default_hyperparams(kind),
        derive_seed(master, base + ("learner",)),
    )
    eval_index = period + 1 if period + 1 < dataset.n_periods else period
    test = apply_scaler(scaler, dataset.periods[eval_index])
    return model, train, test, eval_index


def _cmd_train(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(config)
    kind = LearnerKind.parse(args.learner)
    model, train, test, eval_index = _single_fit(config, dataset, kind, args.period)
    score = auc(test.labels, predict_proba(model, test.features))
    summary = {
        "learner": kind.value,
        "period": args.period,
        "eval_period": eval_index,
        "train_rows": train.n_rows,
        "auc": score,
        "hyperparams": default_hyperparams(kind).values,
    }
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "train_summary.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"auc={score!r} eval_period={eval_index} -> {path}")
    return 0


def _cmd_interpret(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(config)
    kind = LearnerKind.parse(args.learner)
    model, _, test, eval_index = _single_fit(config, dataset, kind, args.period)
    importances = permutation_importance(
        lambda m: predict_proba(model, m),
        test,
        config.importance_repeats,
        derive_seed(config.master_seed, ("importance",)),
    )
    ranking = rank_features(importances)
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "interpret_importance.csv")
    import csv as _csv

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = _csv.writer(handle)
        writer.writerow(["feature", "importance", "rank"])
        for name, value, rank in zip(
            dataset.feature_names, importances.values, ranking.rank
        ):
            writer.writerow([name, repr(float(value)), repr(float(rank))])
    print(
        f"baseline_auc={importances.baseline_auc!r} eval_period={eval_index} -> {path}"
    )
    return 0


def _cmd_spaces(args) -> int:
    payload = {}
    for kind in ALL_LEARNERS:
        payload[kind.value] = {
            "defaults": default_hyperparams(kind).values,
            "search_space": search_space(kind),
        }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        path = os.path.join(args.output_dir, "spaces.json")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    return 0


def _cmd_synth(args) -> int:
    config = SyntheticConfig(
        periods=args.periods,
        rows_per_period=args.rows,
        features=args.features,
        informative=args.informative,
        positive_rate=args.positive_rate,
        drift=args.drift,
        dominance=args.dominance,
        quantized=args.quantized,
        label_rule=args.label_rule,
    )
    dataset = generate_synthetic(config, args.seed)
    os.makedirs(args.output_dir, exist_ok=True)
    path = os.path.join(args.output_dir, args.name)
    write_periodized_csv(dataset, path)
    rows = sum(p.n_rows for p in dataset.periods)
    print(f"{dataset.n_periods} periods, {rows} rows, "
          f"{len(dataset.feature_names)} features -> {path}")
    return 0


def _run_reports(args, section: str) -> int:
    config = _load_config(args)
    dataset = load_dataset(config)
    results = {"config": config}
    if section == "rq1":
        results["rq1"] = run_rq1(config, dataset, jobs=args.jobs)
    elif section == "rq2":
        results["rq2"] = run_rq2(config, dataset, jobs=args.jobs)
    elif section == "rq3":
        results["rq3"] = run_rq3(config, dataset, jobs=args.jobs)
    else:
        results["elbow"] = run_elbow(config, dataset, jobs=args.jobs, k_max=args.k_max)
    paths = emit_reports(results, config.output_dir)
    for path in paths:
        if os.path.getsize(path) == 0:
            raise CliError(f"empty report written: {path}")
    print(f"wrote {len(paths)} report files to {config.output_dir}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in ("rq1", "rq2", "rq3", "elbow"):
            return _run_reports(args, args.command)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "interpret":
            return _cmd_interpret(args)
        if args.command == "spaces":
            return _cmd_spaces(args)
        return _cmd_synth(args)
    except (CliError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
