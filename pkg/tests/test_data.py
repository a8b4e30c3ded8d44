"""Data layer: periods, CSV IO, scaling, sampling, synthetic generation."""

import math

import numpy as np
import pytest

from rankstab.data import (
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
    spearman_filter,
    write_periodized_csv,
)


def _period(features, labels, index=0):
    return Period(period_index=index, features=np.asarray(features, dtype=float),
                  labels=np.asarray(labels))


class TestPeriod:
    def test_rejects_non_binary_labels(self):
        with pytest.raises(ValueError, match="non-binary"):
            _period([[1.0], [2.0]], [0, 2])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            _period([[1.0], [2.0]], [0, 1, 1])

    def test_rejects_1d_features(self):
        with pytest.raises(ValueError, match="2-D"):
            Period(period_index=0, features=np.array([1.0, 2.0]), labels=np.array([0, 1]))

    def test_dataset_requires_gapless_indices(self):
        a = _period([[1.0]], [0], index=0)
        b = _period([[1.0]], [1], index=2)
        with pytest.raises(ValueError, match="gapless"):
            PeriodizedDataset(feature_names=("f0",), periods=(a, b))


class TestScaler:
    def test_population_standardization_frozen_values(self):
        data = _period([[1.0], [2.0], [3.0]], [0, 1, 0])
        scaler = fit_scaler(data)
        assert scaler.mean[0] == 2.0
        assert scaler.std[0] == math.sqrt(2.0 / 3.0)
        scaled = apply_scaler(scaler, data)
        expected = [-1.224744871391589, 0.0, 1.224744871391589]
        assert scaled.features[:, 0].tolist() == expected

    def test_zero_variance_column_maps_to_exact_zero(self):
        data = _period([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]], [0, 1, 0])
        scaler = fit_scaler(data)
        scaled = apply_scaler(scaler, data)
        assert (scaled.features[:, 0] == 0.0).all()

    def test_scale_features_matrix_matches_apply_scaler(self):
        rng = np.random.default_rng(0)
        data = _period(rng.normal(size=(20, 3)), rng.integers(0, 2, size=20))
        scaler = fit_scaler(data)
        np.testing.assert_array_equal(
            scale_features(scaler, data.features),
            apply_scaler(scaler, data).features,
        )


class TestDownsample:
    def test_caps_majority_at_ratio_times_minority(self):
        features = np.arange(1010, dtype=float).reshape(-1, 1)
        labels = np.array([1] * 10 + [0] * 1000)
        out = downsample_majority(_period(features, labels), 10.0, seed=3)
        assert out.n_rows == 110
        assert int(out.labels.sum()) == 10
        # surviving rows keep their original relative order
        assert (np.diff(out.features[:, 0]) > 0).all()

    def test_under_cap_is_unchanged(self):
        data = _period([[1.0], [2.0], [3.0], [4.0]], [0, 0, 1, 1])
        out = downsample_majority(data, 10.0, seed=0)
        np.testing.assert_array_equal(out.features, data.features)
        np.testing.assert_array_equal(out.labels, data.labels)

    def test_deterministic_per_seed(self):
        features = np.arange(300, dtype=float).reshape(-1, 1)
        labels = np.array([1] * 12 + [0] * 288)
        data = _period(features, labels)
        a = downsample_majority(data, 2.0, seed=9)
        b = downsample_majority(data, 2.0, seed=9)
        np.testing.assert_array_equal(a.features, b.features)
        c = downsample_majority(data, 2.0, seed=10)
        assert not np.array_equal(a.features, c.features)

    def test_rejects_single_class_and_bad_ratio(self):
        data = _period([[1.0], [2.0]], [0, 0])
        with pytest.raises(ValueError, match="both classes"):
            downsample_majority(data, 2.0, seed=0)
        ok = _period([[1.0], [2.0]], [0, 1])
        with pytest.raises(ValueError, match="ratio"):
            downsample_majority(ok, 0.0, seed=0)


class TestBootstrap:
    def test_preserves_size_and_draws_with_replacement(self):
        n = 100
        data = _period(np.arange(n, dtype=float).reshape(-1, 1),
                       np.tile([0, 1], n // 2))
        fractions = []
        for seed in range(300):
            out = bootstrap_sample(data, seed)
            assert out.n_rows == n
            fractions.append(len(np.unique(out.features[:, 0])) / n)
        # expected distinct fraction 1-(1-1/n)^n ~ 1-1/e
        assert abs(np.mean(fractions) - (1 - (1 - 1 / n) ** n)) < 0.02

    def test_deterministic_per_seed(self):
        data = _period(np.arange(50, dtype=float).reshape(-1, 1),
                       np.tile([0, 1], 25))
        a = bootstrap_sample(data, 4)
        b = bootstrap_sample(data, 4)
        np.testing.assert_array_equal(a.features, b.features)

    def test_require_both_classes_always_holds(self):
        # 1 positive in 40 rows: plain bootstrap often drops the class
        data = _period(np.arange(40, dtype=float).reshape(-1, 1),
                       np.array([1] + [0] * 39))
        for seed in range(200):
            out = bootstrap_sample(data, seed, require_both_classes=True)
            assert 0 < int(out.labels.sum()) < out.n_rows


class TestCsvRoundTrip:
    def test_round_trip_exact(self, tmp_path):
        config = SyntheticConfig(periods=3, rows_per_period=25, features=4,
                                 positive_rate=0.3, quantized=1)
        dataset = generate_synthetic(config, seed=5)
        path = tmp_path / "data.csv"
        write_periodized_csv(dataset, path)
        loaded = load_periodized_csv(path, "label", "period")
        assert loaded.feature_names == dataset.feature_names
        assert loaded.n_periods == dataset.n_periods
        for mine, theirs in zip(dataset.periods, loaded.periods):
            np.testing.assert_array_equal(mine.features, theirs.features)
            np.testing.assert_array_equal(mine.labels, theirs.labels)

    def _write(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text, encoding="utf-8")
        return path

    def test_missing_column(self, tmp_path):
        path = self._write(tmp_path, "f0,label\n1.0,0\n")
        with pytest.raises(ValueError, match="period"):
            load_periodized_csv(path, "label", "period")

    def test_non_integer_period(self, tmp_path):
        path = self._write(tmp_path, "f0,label,period\n1.0,0,1.5\n")
        with pytest.raises(ValueError, match="period"):
            load_periodized_csv(path, "label", "period")

    def test_gap_in_periods(self, tmp_path):
        path = self._write(
            tmp_path, "f0,label,period\n1.0,0,0\n2.0,1,0\n3.0,0,2\n4.0,1,2\n"
        )
        with pytest.raises(ValueError, match="empty period 1"):
            load_periodized_csv(path, "label", "period")

    def test_non_binary_label(self, tmp_path):
        path = self._write(tmp_path, "f0,label,period\n1.0,3,0\n")
        with pytest.raises(ValueError, match="non-binary"):
            load_periodized_csv(path, "label", "period")

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = self._write(tmp_path, "f0,label,period\n1.0,0,0\noops,1,0\n")
        with pytest.raises(ValueError) as err:
            load_periodized_csv(path, "label", "period")
        assert "f0" in str(err.value) and "3" in str(err.value)

    def test_wrong_column_count(self, tmp_path):
        path = self._write(tmp_path, "f0,f1,label,period\n1.0,0,0\n")
        with pytest.raises(ValueError, match="column"):
            load_periodized_csv(path, "label", "period")

    def test_empty_file(self, tmp_path):
        path = self._write(tmp_path, "")
        with pytest.raises(ValueError, match="empty"):
            load_periodized_csv(path, "label", "period")


class TestSynthetic:
    def test_deterministic_for_config_and_seed(self):
        config = SyntheticConfig(periods=3, rows_per_period=30, features=3)
        a = generate_synthetic(config, seed=1)
        b = generate_synthetic(config, seed=1)
        for pa, pb in zip(a.periods, b.periods):
            np.testing.assert_array_equal(pa.features, pb.features)
            np.testing.assert_array_equal(pa.labels, pb.labels)
        c = generate_synthetic(config, seed=2)
        assert not np.array_equal(a.periods[0].features, c.periods[0].features)

    def test_shapes_names_and_class_presence(self):
        config = SyntheticConfig(periods=4, rows_per_period=40, features=5,
                                 positive_rate=0.1)
        dataset = generate_synthetic(config, seed=0)
        assert dataset.feature_names == ("f0", "f1", "f2", "f3", "f4")
        for i, p in enumerate(dataset.periods):
            assert p.period_index == i
            assert p.features.shape == (40, 5)
            assert 0 < int(p.labels.sum()) < 40

    def test_positive_rate_is_calibrated(self):
        config = SyntheticConfig(periods=2, rows_per_period=4000, features=4,
                                 positive_rate=0.25)
        dataset = generate_synthetic(config, seed=3)
        rate = np.mean([p.labels.mean() for p in dataset.periods])
        assert abs(rate - 0.25) < 0.03

    def test_quantized_columns_sit_on_half_unit_grid(self):
        config = SyntheticConfig(periods=2, rows_per_period=50, features=4,
                                 quantized=2)
        dataset = generate_synthetic(config, seed=6)
        grid = dataset.periods[0].features[:, :2] * 2.0
        np.testing.assert_array_equal(grid, np.round(grid))
        rest = dataset.periods[0].features[:, 2:] * 2.0
        assert not np.array_equal(rest, np.round(rest))

    def test_nonlinear_rule_accepted(self):
        config = SyntheticConfig(periods=2, rows_per_period=30, features=4,
                                 label_rule="nonlinear")
        dataset = generate_synthetic(config, seed=0)
        assert dataset.n_periods == 2

    def test_validation_errors(self):
        with pytest.raises(ValueError, match="periods"):
            SyntheticConfig(periods=1, rows_per_period=30, features=3)
        with pytest.raises(ValueError, match="rows_per_period"):
            SyntheticConfig(periods=2, rows_per_period=5, features=3)
        with pytest.raises(ValueError, match="positive_rate"):
            SyntheticConfig(periods=2, rows_per_period=30, features=3,
                            positive_rate=1.5)
        with pytest.raises(ValueError, match="label_rule"):
            SyntheticConfig(periods=2, rows_per_period=30, features=3,
                            label_rule="cubic")


def _single_period_dataset(features):
    features = np.asarray(features, dtype=float)
    labels = np.tile([0, 1], features.shape[0] // 2 + 1)[: features.shape[0]]
    period = Period(period_index=0, features=features, labels=labels)
    names = tuple(f"f{j}" for j in range(features.shape[1]))
    return PeriodizedDataset(feature_names=names, periods=(period,))


class TestSpearmanFilter:
    def test_duplicate_column_is_dropped(self):
        rng = np.random.default_rng(2)
        base = rng.normal(size=50)
        dataset = _single_period_dataset(
            np.column_stack([base, base.copy(), rng.normal(size=50)])
        )
        assert spearman_filter(dataset, threshold=0.9) == (0, 2)

    def test_independent_columns_all_kept(self):
        rng = np.random.default_rng(3)
        dataset = _single_period_dataset(rng.normal(size=(80, 4)))
        assert spearman_filter(dataset, threshold=0.9) == (0, 1, 2, 3)

    def test_threshold_validated(self):
        dataset = _single_period_dataset(np.random.default_rng(0).normal(size=(20, 2)))
        with pytest.raises(ValueError, match="threshold"):
            spearman_filter(dataset, threshold=0.0)
