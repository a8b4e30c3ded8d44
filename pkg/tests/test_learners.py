"""Learner semantics: determinism contracts, fit quality oracles,
hyperparameter spaces, and the randomized search loop."""

import math

import numpy as np
import pytest

from rankstab.data import Period
from rankstab.learners import (
    ALL_LEARNERS,
    HyperparamSet,
    LearnerKind,
    SeedMode,
    SeedPolicy,
    SeedSpec,
    default_hyperparams,
    fit,
    predict_proba,
    random_search,
    search_space,
)
from rankstab.learners import _m_try, _sample_hyperparams
from rankstab.metrics import auc


def _period(features, labels):
    return Period(period_index=0, features=np.asarray(features, dtype=float),
                  labels=np.asarray(labels))


def _noisy_data(seed=0, n=120, f=4):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, f))
    logit = 1.5 * x[:, 0] - 1.0 * x[:, 1] + rng.normal(scale=0.8, size=n)
    return _period(x, (logit > 0).astype(int))


def _tie_rich_data(seed=0, n=80):
    # duplicated columns create exact gini ties that only the seed resolves
    rng = np.random.default_rng(seed)
    base = np.round(rng.normal(size=n))
    x = np.column_stack([base, base, rng.integers(0, 3, size=n)])
    y = (base + rng.normal(scale=0.5, size=n) > 0).astype(int)
    return _period(x, y)


class TestLearnerKind:
    def test_parse_aliases(self):
        assert LearnerKind.parse("lr") is LearnerKind.LOGISTIC_REGRESSION
        assert LearnerKind.parse("cart") is LearnerKind.CART
        assert LearnerKind.parse("rf") is LearnerKind.RANDOM_FOREST
        assert LearnerKind.parse("gbdt") is LearnerKind.GBDT
        assert LearnerKind.parse("RandomForest") is LearnerKind.RANDOM_FOREST

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError, match="unknown learner"):
            LearnerKind.parse("svm")

    def test_deterministic_flags(self):
        assert LearnerKind.LOGISTIC_REGRESSION.is_deterministic
        assert LearnerKind.GBDT.is_deterministic
        assert not LearnerKind.CART.is_deterministic
        assert not LearnerKind.RANDOM_FOREST.is_deterministic


class TestDeterminismMatrix:
    @pytest.mark.parametrize("kind", ALL_LEARNERS)
    def test_same_seed_bit_stable(self, kind):
        data = _tie_rich_data()
        hp = default_hyperparams(kind)
        a = fit(kind, data, hp, 7)
        b = fit(kind, data, hp, 7)
        np.testing.assert_array_equal(
            predict_proba(a, data.features), predict_proba(b, data.features)
        )

    @pytest.mark.parametrize("kind",
                             [LearnerKind.LOGISTIC_REGRESSION, LearnerKind.GBDT])
    def test_seed_ignoring_learners(self, kind):
        data = _noisy_data()
        hp = default_hyperparams(kind)
        a = fit(kind, data, hp, 1)
        b = fit(kind, data, hp, 999)
        np.testing.assert_array_equal(
            predict_proba(a, data.features), predict_proba(b, data.features)
        )

    def test_cart_seed_resolves_tied_splits(self):
        # identical columns tie exactly, so the chosen root feature is the
        # seed's pick; the induced partition (and predictions) never change
        data = _tie_rich_data()
        hp = default_hyperparams(LearnerKind.CART)
        roots = {
            int(fit(LearnerKind.CART, data, hp, seed).state["tree"][0][0])
            for seed in range(12)
        }
        assert roots == {0, 1}

    def test_random_forest_seed_changes_predictions(self):
        data = _tie_rich_data()
        hp = default_hyperparams(LearnerKind.RANDOM_FOREST)
        base = predict_proba(fit(LearnerKind.RANDOM_FOREST, data, hp, 0),
                             data.features)
        assert any(
            not np.array_equal(
                base,
                predict_proba(fit(LearnerKind.RANDOM_FOREST, data, hp, seed),
                              data.features),
            )
            for seed in range(1, 4)
        )


class TestLogisticRegression:
    def test_separable_data_reaches_auc_one(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(60, 2))
        y = (x[:, 0] > 0).astype(int)
        data = _period(x, y)
        model = fit(LearnerKind.LOGISTIC_REGRESSION, data,
                    default_hyperparams(LearnerKind.LOGISTIC_REGRESSION), 0)
        assert auc(y, predict_proba(model, x)) == 1.0

    def test_xor_is_not_linearly_learnable(self):
        rng = np.random.default_rng(2)
        x = rng.integers(0, 2, size=(200, 2)).astype(float)
        y = (x[:, 0] != x[:, 1]).astype(int)
        x += rng.normal(scale=0.05, size=x.shape)
        data = _period(x, y)
        model = fit(LearnerKind.LOGISTIC_REGRESSION, data,
                    default_hyperparams(LearnerKind.LOGISTIC_REGRESSION), 0)
        assert auc(y, predict_proba(model, x)) < 0.65


class TestCart:
    def test_unbounded_tree_purifies_distinct_rows(self):
        data = _noisy_data(seed=3, n=90)
        model = fit(LearnerKind.CART, data, default_hyperparams(LearnerKind.CART), 0)
        probs = predict_proba(model, data.features)
        assert set(np.unique(probs)) <= {0.0, 1.0}
        np.testing.assert_array_equal(probs, data.labels.astype(float))

    def test_known_stump_structure(self):
        # one clean cut at 2.5 separates the classes perfectly
        x = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]])
        y = np.array([0, 0, 0, 1, 1, 1])
        model = fit(LearnerKind.CART, _period(x, y),
                    default_hyperparams(LearnerKind.CART), 0)
        tree = model.state["tree"]
        feature, threshold, left, right, value = tree
        assert int(feature[0]) == 0
        assert float(threshold[0]) == 2.5
        assert int(feature[left[0]]) == -1 and float(value[left[0]]) == 0.0
        assert int(feature[right[0]]) == -1 and float(value[right[0]]) == 1.0

    def test_max_depth_one_is_a_stump(self):
        data = _noisy_data(seed=4)
        model = fit(LearnerKind.CART, data,
                    HyperparamSet(values={"max_depth": 1, "min_leaf": 1}), 0)
        assert len(np.unique(predict_proba(model, data.features))) <= 2


class TestGbdt:
    def test_learns_xor_interactions(self):
        rng = np.random.default_rng(5)
        x = rng.integers(0, 2, size=(200, 2)).astype(float)
        y = (x[:, 0] != x[:, 1]).astype(int)
        x += rng.normal(scale=0.05, size=x.shape)
        data = _period(x, y)
        model = fit(LearnerKind.GBDT, data, default_hyperparams(LearnerKind.GBDT), 0)
        assert auc(y, predict_proba(model, x)) > 0.99

    def test_probabilities_strictly_inside_unit_interval(self):
        data = _noisy_data(seed=6)
        model = fit(LearnerKind.GBDT, data, default_hyperparams(LearnerKind.GBDT), 0)
        probs = predict_proba(model, data.features)
        assert (probs > 0.0).all() and (probs < 1.0).all()

    def test_base_score_is_log_odds(self):
        data = _noisy_data(seed=7, n=100)
        model = fit(LearnerKind.GBDT, data,
                    HyperparamSet(values={"rounds": 0, "learning_rate": 0.1,
                                          "max_depth": 3}), 0)
        pos = int(data.labels.sum())
        expected = math.log(pos / (100 - pos))
        assert model.state["base"] == expected
        probs = predict_proba(model, data.features)
        assert np.allclose(probs, 1 / (1 + math.exp(-expected)))


class TestRandomForest:
    def test_prediction_is_tree_average(self):
        data = _noisy_data(seed=8, n=60)
        hp = HyperparamSet(values={"trees": 5, "max_depth": 0,
                                   "features_per_split": "sqrt", "min_leaf": 1})
        model = fit(LearnerKind.RANDOM_FOREST, data, hp, 3)
        probs = predict_proba(model, data.features)
        assert (0.0 <= probs).all() and (probs <= 1.0).all()
        assert len(model.state["trees"]) == 5

    def test_m_try_rules(self):
        assert _m_try("sqrt", 10) == 3
        assert _m_try("log2", 10) == 3
        assert _m_try(0.5, 10) == 5
        assert _m_try("sqrt", 1) == 1
        assert _m_try(0.5, 1) == 1


class TestValidation:
    def test_single_class_rejected(self):
        data = _period([[1.0], [2.0]], [1, 1])
        with pytest.raises(ValueError, match="single-class"):
            fit(LearnerKind.CART, data, default_hyperparams(LearnerKind.CART), 0)

    def test_non_finite_rejected(self):
        data = _period([[1.0], [np.nan]], [0, 1])
        with pytest.raises(ValueError, match="non-finite"):
            fit(LearnerKind.LOGISTIC_REGRESSION, data,
                default_hyperparams(LearnerKind.LOGISTIC_REGRESSION), 0)

    def test_predict_shape_mismatch(self):
        data = _noisy_data()
        model = fit(LearnerKind.LOGISTIC_REGRESSION, data,
                    default_hyperparams(LearnerKind.LOGISTIC_REGRESSION), 0)
        with pytest.raises(ValueError, match="feature"):
            predict_proba(model, np.zeros((3, 7)))

    def test_predict_empty_matrix(self):
        data = _noisy_data()
        model = fit(LearnerKind.GBDT, data, default_hyperparams(LearnerKind.GBDT), 0)
        out = predict_proba(model, np.zeros((0, 4)))
        assert out.shape == (0,)


class TestHyperparams:
    def test_defaults_are_flagged_and_exact(self):
        hp = default_hyperparams(LearnerKind.LOGISTIC_REGRESSION)
        assert hp.default is True
        assert hp.values == {"l2": 1.0, "max_iter": 1000, "tol": 1e-6}
        assert default_hyperparams(LearnerKind.CART).values == {
            "max_depth": 0, "min_leaf": 1}
        assert default_hyperparams(LearnerKind.RANDOM_FOREST).values == {
            "trees": 100, "max_depth": 0, "features_per_split": "sqrt",
            "min_leaf": 1}
        assert default_hyperparams(LearnerKind.GBDT).values == {
            "rounds": 100, "learning_rate": 0.1, "max_depth": 3}

    @pytest.mark.parametrize("kind", ALL_LEARNERS)
    def test_samples_stay_inside_declared_space(self, kind):
        rng = np.random.default_rng(0)
        space = search_space(kind)
        saw_unlimited = False
        for _ in range(300):
            hp = _sample_hyperparams(kind, rng)
            assert hp.default is False
            for name, spec in space.items():
                value = hp[name]
                if spec["type"] == "loguniform":
                    assert spec["low"] <= value <= spec["high"]
                elif spec["type"] == "intrange":
                    assert spec["low"] <= value <= spec["high"]
                elif spec["type"] == "intrange_or_unlimited":
                    assert value == 0 or spec["low"] <= value <= spec["high"]
                    saw_unlimited = saw_unlimited or value == 0
                else:
                    assert value in spec["options"]
        if kind is LearnerKind.RANDOM_FOREST:
            assert saw_unlimited
            assert hp["min_leaf"] == 1

    def test_unsearched_knobs_keep_defaults(self):
        rng = np.random.default_rng(1)
        hp = _sample_hyperparams(LearnerKind.LOGISTIC_REGRESSION, rng)
        assert hp["max_iter"] == 1000 and hp["tol"] == 1e-6
        assert hp["l2"] != 1.0


class TestSeedPolicy:
    def test_learner_seed_cannot_be_disabled(self):
        with pytest.raises(ValueError, match="learner_seed"):
            SeedPolicy(SeedSpec.disabled(), SeedSpec.free(), None)

    def test_modes_round_trip(self):
        policy = SeedPolicy(SeedSpec.fixed(3), SeedSpec.disabled(),
                            SeedSpec.free())
        assert policy.learner_seed.mode is SeedMode.FIXED
        assert policy.search_seed.mode is SeedMode.DISABLED
        assert policy.sampling.mode is SeedMode.FREE


class TestRandomSearch:
    def test_deterministic_for_seeds(self):
        data = _noisy_data(seed=9, n=100)
        a = random_search(LearnerKind.CART, data, 6, search_seed=3, learner_seed=1)
        b = random_search(LearnerKind.CART, data, 6, search_seed=3, learner_seed=1)
        assert a.values == b.values

    def test_search_seed_changes_draws(self):
        data = _noisy_data(seed=10, n=100)
        results = {
            tuple(sorted(random_search(LearnerKind.CART, data, 4,
                                       search_seed=s, learner_seed=1).values.items()))
            for s in range(6)
        }
        assert len(results) > 1

    def test_n_iter_one_returns_first_sample(self):
        data = _noisy_data(seed=11, n=100)
        hp = random_search(LearnerKind.GBDT, data, 1, search_seed=5, learner_seed=0)
        expected = _sample_hyperparams(
            LearnerKind.GBDT, np.random.Generator(np.random.PCG64(5))
        )
        assert hp.values == expected.values

    def test_requires_two_rows_per_class(self):
        data = _period([[1.0], [2.0], [3.0]], [0, 0, 1])
        with pytest.raises(ValueError, match="class"):
            random_search(LearnerKind.CART, data, 2, search_seed=0, learner_seed=0)
