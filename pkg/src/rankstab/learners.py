"""Four built-in learners behind one fit/predict contract.

LogisticRegression and Gbdt are deterministic given hyperparameters and
never consume the learner seed; Cart uses it to break exactly-tied split
gains and RandomForest additionally for bootstraps and per-node feature
subsets. All tree work runs on the selected kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from ._seeds import derive_seed

__all__ = [
    "LearnerKind",
    "HyperparamSet",
    "FittedModel",
    "SeedMode",
    "SeedSpec",
    "SeedPolicy",
    "fit",
    "predict_proba",
    "default_hyperparams",
    "search_space",
    "random_search",
    "ALL_LEARNERS",
]


class LearnerKind(Enum):
    LOGISTIC_REGRESSION = "LogisticRegression"
    CART = "Cart"
    RANDOM_FOREST = "RandomForest"
    GBDT = "Gbdt"

    @classmethod
    def parse(cls, text: str) -> "LearnerKind":
        aliases = {
            "lr": cls.LOGISTIC_REGRESSION,
            "logisticregression": cls.LOGISTIC_REGRESSION,
            "cart": cls.CART,
            "rf": cls.RANDOM_FOREST,
            "randomforest": cls.RANDOM_FOREST,
            "gbdt": cls.GBDT,
        }
        key = text.strip().lower()
        if key not in aliases:
            raise ValueError(f"unknown learner: {text!r}")
        return aliases[key]

    @property
    def is_deterministic(self) -> bool:
        return self in (LearnerKind.LOGISTIC_REGRESSION, LearnerKind.GBDT)


ALL_LEARNERS = (
    LearnerKind.LOGISTIC_REGRESSION,
    LearnerKind.CART,
    LearnerKind.RANDOM_FOREST,
    LearnerKind.GBDT,
)


@dataclass(frozen=True)
class HyperparamSet:
    """Named hyperparameter values plus a default-set marker.

    max_depth uses 0 to mean unlimited.
    """

    values: dict
    default: bool = False

    def __getitem__(self, name):
        return self.values[name]


@dataclass(frozen=True)
class FittedModel:
    kind: LearnerKind
    hyperparams: HyperparamSet
    state: dict
    feature_count: int


class SeedMode(Enum):
    FIXED = "Fixed"
    FREE = "Free"
    DISABLED = "Disabled"


@dataclass(frozen=True)
class SeedSpec:
    mode: SeedMode
    value: int = 0

    @classmethod
    def fixed(cls, value: int) -> "SeedSpec":
        return cls(SeedMode.FIXED, int(value))

    @classmethod
    def free(cls) -> "SeedSpec":
        return cls(SeedMode.FREE)

    @classmethod
    def disabled(cls) -> "SeedSpec":
        return cls(SeedMode.DISABLED)


@dataclass(frozen=True)
class SeedPolicy:
    """One controlled-randomness configuration.

    learner_seed: Fixed or Free.
    search_seed: Fixed, Free, or Disabled (Disabled = use defaults).
    sampling: None for the full period, or a SeedSpec for bootstrap.
    """

    learner_seed: SeedSpec
    search_seed: SeedSpec
    sampling: SeedSpec | None = None

    def __post_init__(self):
        if self.learner_seed.mode is SeedMode.DISABLED:
            raise ValueError("learner_seed cannot be Disabled")
        if self.sampling is not None and self.sampling.mode is SeedMode.DISABLED:
            raise ValueError("bootstrap sampling seed cannot be Disabled")


_DEFAULTS = {
    LearnerKind.LOGISTIC_REGRESSION: {"l2": 1.0, "max_iter": 1000, "tol": 1e-6},
    LearnerKind.CART: {"max_depth": 0, "min_leaf": 1},
    LearnerKind.RANDOM_FOREST: {
        "trees": 100,
        "max_depth": 0,
        "features_per_split": "sqrt",
        "min_leaf": 1,
    },
    LearnerKind.GBDT: {"rounds": 100, "learning_rate": 0.1, "max_depth": 3},
}


def default_hyperparams(kind: LearnerKind) -> HyperparamSet:
    return HyperparamSet(values=dict(_DEFAULTS[kind]), default=True)


def search_space(kind: LearnerKind) -> dict:
    """Declared hyperparameter space, in the order sampling consumes RNG."""
    if kind is LearnerKind.LOGISTIC_REGRESSION:
        return {"l2": {"type": "loguniform", "low": 1e-4, "high": 1e2}}
    if kind is LearnerKind.CART:
        return {
            "max_depth": {"type": "intrange", "low": 2, "high": 20},
            "min_leaf": {"type": "intrange", "low": 1, "high": 50},
        }
    if kind is LearnerKind.RANDOM_FOREST:
        return {
            "trees": {"type": "intrange", "low": 50, "high": 300},
            "max_depth": {"type": "intrange_or_unlimited", "low": 4, "high": 24},
            "features_per_split": {"type": "choice", "options": ["sqrt", "log2", 0.5]},
        }
    return {
        "rounds": {"type": "intrange", "low": 50, "high": 300},
        "learning_rate": {"type": "loguniform", "low": 0.01, "high": 0.3},
        "max_depth": {"type": "intrange", "low": 2, "high": 8},
    }


def _sample_hyperparams(kind: LearnerKind, rng: np.random.Generator) -> HyperparamSet:
    # unsearched knobs (LR max_iter/tol, RF min_leaf, ...) keep their defaults
    values = dict(_DEFAULTS[kind])
    for name, spec in search_space(kind).items():
        if spec["type"] == "loguniform":
            values[name] = float(
                math.exp(rng.uniform(math.log(spec["low"]), math.log(spec["high"])))
            )
        elif spec["type"] == "intrange":
            values[name] = int(rng.integers(spec["low"], spec["high"] + 1))
        elif spec["type"] == "intrange_or_unlimited":
            v = int(rng.integers(spec["low"], spec["high"] + 2))
            values[name] = 0 if v == spec["high"] + 1 else v
        else:
            values[name] = spec["options"][int(rng.integers(0, len(spec["options"])))]
    return HyperparamSet(values=values, default=False)


def _validate_training_data(x: np.ndarray, y: np.ndarray) -> None:
    if not np.isfinite(x).all():
        raise ValueError("non-finite feature values")
    pos = int(y.sum())
    if pos == 0 or pos == y.size:
        raise ValueError("single-class training data")


def _m_try(features_per_split, n_features: int) -> int:
    if features_per_split == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if features_per_split == "log2":
        return max(1, int(math.log2(n_features)))
    return max(1, int(float(features_per_split) * n_features))


def _fit_logistic(x: np.ndarray, y: np.ndarray, hp: HyperparamSet) -> dict:
    """Full-batch gradient descent, zero init, step 1/L (L = Lipschitz bound).

    Penalty l2/(2n)*||w||^2 excludes the bias.
    """
    n, f = x.shape
    l2 = float(hp["l2"])
    max_iter = int(hp["max_iter"])
    tol = float(hp["tol"])
    w = np.zeros(f)
    b = 0.0
    yf = y.astype(np.float64)
    lipschitz = (float((x * x).sum()) + n) / (4.0 * n) + l2 / n
    step = 1.0 / lipschitz
    for _ in range(max_iter):
        p = _sigmoid(x @ w + b)
        residual = p - yf
        grad_w = x.T @ residual / n + (l2 / n) * w
        grad_b = residual.mean()
        if max(float(np.abs(grad_w).max(initial=0.0)), abs(grad_b)) <= tol:
            break
        w -= step * grad_w
        b -= step * grad_b
    return {"weights": w, "bias": b}


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _fit_gbdt(x: np.ndarray, y: np.ndarray, hp: HyperparamSet) -> dict:
    rounds = int(hp["rounds"])
    lr = float(hp["learning_rate"])
    max_depth = int(hp["max_depth"])
    n = x.shape[0]
    pos = int(y.sum())
    base = math.log(pos / (n - pos))
    yf = y.astype(np.float64)
    score = np.full(n, base)
    trees = []
    for _ in range(rounds):
        p = np.clip(_sigmoid(score), 1e-6, 1.0 - 1e-6)
        tree = _kernels.grow_mse_tree(x, p - yf, p * (1.0 - p), max_depth, 1)
        trees.append(tree)
        score = score + lr * _kernels.predict_tree(*tree, x)
    return {"base": base, "learning_rate": lr, "trees": tuple(trees)}


def fit(kind: LearnerKind, train, hyperparams: HyperparamSet, learner_seed: int) -> FittedModel:
    """Train one model. Cart/RandomForest are bit-stable under a fixed
    learner_seed; LogisticRegression/Gbdt ignore the seed entirely."""
    x = np.ascontiguousarray(train.features, dtype=np.float64)
    y = np.ascontiguousarray(train.labels, dtype=np.int64)
    if x.shape[1] < 1:
        raise ValueError("need at least one feature")
    _validate_training_data(x, y)

    if kind is LearnerKind.LOGISTIC_REGRESSION:
        state = _fit_logistic(x, y, hyperparams)
    elif kind is LearnerKind.CART:
        tree = _kernels.grow_gini_tree(
            x,
            y,
            int(hyperparams["max_depth"]),
            int(hyperparams["min_leaf"]),
            x.shape[1],
            False,
            learner_seed,
        )
        state = {"tree": tree}
    elif kind is LearnerKind.RANDOM_FOREST:
        m_try = _m_try(hyperparams["features_per_split"], x.shape[1])
        trees = []
        for t in range(int(hyperparams["trees"])):
            trees.append(
                _kernels.grow_gini_tree(
                    x,
                    y,
                    int(hyperparams["max_depth"]),
                    int(hyperparams["min_leaf"]),
                    m_try,
                    True,
                    derive_seed(learner_seed, ("tree", t)),
                )
            )
        state = {"trees": tuple(trees)}
    elif kind is LearnerKind.GBDT:
        state = _fit_gbdt(x, y, hyperparams)
    else:
        raise ValueError(f"unknown learner kind: {kind}")
    return FittedModel(
        kind=kind, hyperparams=hyperparams, state=state, feature_count=x.shape[1]
    )


def predict_proba(model: FittedModel, features) -> np.ndarray:
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if x.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if x.shape[1] != model.feature_count:
        raise ValueError(
            f"feature count mismatch: model has {model.feature_count}, input has {x.shape[1]}"
        )
    if model.kind is LearnerKind.LOGISTIC_REGRESSION:
        return _sigmoid(x @ model.state["weights"] + model.state["bias"])
    if model.kind is LearnerKind.CART:
        return _kernels.predict_tree(*model.state["tree"], x)
    if model.kind is LearnerKind.RANDOM_FOREST:
        acc = np.zeros(x.shape[0])
        for tree in model.state["trees"]:
            acc += _kernels.predict_tree(*tree, x)
        return acc / len(model.state["trees"])
    score = np.full(x.shape[0], model.state["base"])
    lr = model.state["learning_rate"]
    for tree in model.state["trees"]:
        score = score + lr * _kernels.predict_tree(*tree, x)
    return _sigmoid(score)


def _stratified_split(y: np.ndarray, seed: int):
    """80/20 split preserving class balance; both sides get both classes."""
    rng = np.random.Generator(np.random.PCG64(seed))
    train_idx = []
    val_idx = []
    for cls in (0, 1):
        members = np.nonzero(y == cls)[0]
        if members.size < 2:
            raise ValueError(
                "training data too small for a stratified split (< 2 rows per class)"
            )
        order = rng.permutation(members.size)
        take = max(1, int(math.floor(0.8 * members.size)))
        if take == members.size:
            take = members.size - 1
        train_idx.append(members[order[:take]])
        val_idx.append(members[order[take:]])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def random_search(
    kind: LearnerKind, train, n_iter: int, search_seed: int, learner_seed: int
) -> HyperparamSet:
    """Uniformly sample n_iter configurations and return the best by AUC
    on an internal stratified 80/20 split (ties keep the first sampled)."""
    from .metrics import auc
    from .data import Period

    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    y = np.asarray(train.labels, dtype=np.int64)
    train_idx, val_idx = _stratified_split(y, derive_seed(search_seed, ("split",)))
    inner_train = Period(
        period_index=train.period_index,
        features=train.features[train_idx],
        labels=y[train_idx],
    )
    val_x = train.features[val_idx]
    val_y = y[val_idx]

    rng = np.random.Generator(np.random.PCG64(search_seed))
    best_hp = None
    best_auc = -np.inf
    for _ in range(n_iter):
        hp = _sample_hyperparams(kind, rng)
        model = fit(kind, inner_train, hp, learner_seed)
        score = auc(val_y, predict_proba(model, val_x))
        if score > best_auc:
            best_auc = score
            best_hp = hp
    return best_hp
