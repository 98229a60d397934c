import json

import numpy as np
import pytest

from sngsynth import (Dataset, ExperimentConfig, Hyperparameters,
                      KNearestNeighbors, MultinomialLogisticRegression,
                      classify_metrics, format_report_table, make_blobs,
                      register_classifier, run_experiment, stratified_split)


class TestStratifiedSplit:
    def test_balanced_split_exact_counts(self):
        ds = make_blobs(50, 2, 2, 8.0, 1.0, seed=1)  # 100 samples, 50 per class
        train, test = stratified_split(ds, 0.7, seed=0)
        for c in (0, 1):
            assert (train.labels == c).sum() == 35
            assert (test.labels == c).sum() == 15

    def test_half_split_of_four_samples(self):
        ds = Dataset.from_arrays([[0.0], [1.0], [10.0], [11.0]], [0, 0, 1, 1],
                                 ["a", "b"])
        train, test = stratified_split(ds, 0.5, seed=3)
        for c in (0, 1):
            assert (train.labels == c).sum() == 1
            assert (test.labels == c).sum() == 1

    def test_same_seed_gives_identical_partition(self):
        ds = make_blobs(20, 3, 4, 8.0, 1.0, seed=2)
        a_train, a_test = stratified_split(ds, 0.7, seed=9)
        b_train, b_test = stratified_split(ds, 0.7, seed=9)
        assert np.array_equal(a_train.ids, b_train.ids)
        assert np.array_equal(a_test.ids, b_test.ids)

    def test_partition_is_disjoint_and_complete(self):
        ds = make_blobs(31, 3, 2, 8.0, 1.0, seed=5)
        train, test = stratified_split(ds, 0.7, seed=1)
        train_ids = set(train.ids.tolist())
        test_ids = set(test.ids.tolist())
        assert not train_ids & test_ids
        assert train_ids | test_ids == set(ds.ids.tolist())
        # proportions preserved to within one sample
        for c in range(3):
            expected = 0.7 * (ds.labels == c).sum()
            assert abs((train.labels == c).sum() - expected) <= 1.0

    def test_single_sample_class_rejected(self):
        ds = Dataset.from_arrays([[0.0], [1.0], [2.0]], [0, 0, 1], ["a", "b"])
        with pytest.raises(ValueError, match="at least 2"):
            stratified_split(ds, 0.7, seed=0)

    def test_split_norm_meta_reflects_each_side(self):
        ds = make_blobs(30, 2, 2, 8.0, 1.0, seed=4)
        train, test = stratified_split(ds, 0.7, seed=0)
        assert np.array_equal(train.norm_meta,
                              np.stack([train.features.min(0),
                                        train.features.max(0)], axis=1))


class TestClassifyMetrics:
    def test_perfect_predictions(self):
        m = classify_metrics([0, 1, 2, 0, 1, 2], [0, 1, 2, 0, 1, 2], 3)
        assert m.accuracy == 1.0
        assert m.macro_precision == 1.0
        assert m.macro_recall == 1.0
        assert m.macro_f1 == 1.0
        assert np.allclose(np.diag(m.confusion_percent), 100.0)

    def test_binary_hand_oracle(self):
        # enumerate the four outcomes by hand: one TP/FP/FN/TN per class
        m = classify_metrics([1, 1, 0, 0], [1, 0, 1, 0], 2)
        assert m.accuracy == 0.5
        assert np.allclose(m.per_class_precision, [0.5, 0.5])
        assert np.allclose(m.per_class_recall, [0.5, 0.5])
        assert m.macro_f1 == 0.5

    def test_degenerate_predictor_hand_oracle(self):
        # all predictions class 0 over balanced truth; 0/0 -> 0 convention
        m = classify_metrics([0, 0, 0, 0], [0, 0, 1, 1], 2)
        assert m.accuracy == 0.5
        assert m.macro_precision == 0.25
        assert m.macro_recall == 0.5
        assert m.macro_f1 == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_confusion_rows_sum_to_hundred(self):
        rng = np.random.default_rng(7)
        truth = rng.integers(0, 4, size=200)
        preds = rng.integers(0, 4, size=200)
        m = classify_metrics(preds, truth, 4)
        assert np.allclose(m.confusion_percent.sum(axis=1), 100.0, atol=0.1)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            classify_metrics([0, 1], [0], 2)
        with pytest.raises(ValueError):
            classify_metrics([], [], 2)


class TestBuiltinClassifiers:
    def test_knn_k1_memorizes_training_set(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 3))
        y = rng.integers(0, 3, size=30)
        clf = KNearestNeighbors(k=1).fit(X, y, 3)
        assert np.array_equal(clf.predict(X), y)

    def test_knn_majority_vote(self):
        X = np.array([[0.0, 1.0], [0.0, -1.0], [1.0, 0.0]])
        y = np.array([0, 0, 1])
        clf = KNearestNeighbors(k=3).fit(X, y, 2)
        # query equidistant from all three: two votes for class 0, one for 1
        assert clf.predict(np.array([[0.0, 0.0]]))[0] == 0

    def test_knn_class_tie_breaks_low_index(self):
        X = np.array([[0.0, 1.0], [0.0, -1.0]])
        y = np.array([1, 0])
        clf = KNearestNeighbors(k=2).fit(X, y, 2)
        assert clf.predict(np.array([[0.0, 0.0]]))[0] == 0

    def test_logreg_separates_one_dimensional_classes(self):
        rng = np.random.default_rng(3)
        x_train = np.concatenate([rng.uniform(-1.0, -0.1, 40),
                                  rng.uniform(0.1, 1.0, 40)])
        y_train = np.concatenate([np.zeros(40, dtype=int), np.ones(40, dtype=int)])
        x_test = np.array([-0.7, -0.3, -0.05, 0.05, 0.4, 0.9])
        y_test = (x_test > 0).astype(int)  # sign oracle confirms separability
        assert np.all(x_train[y_train == 0] < 0) and np.all(x_train[y_train == 1] > 0)
        clf = MultinomialLogisticRegression().fit(x_train[:, None], y_train, 2)
        assert np.array_equal(clf.predict(x_test[:, None]), y_test)

    def test_logreg_is_deterministic(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 3, size=50)
        a = MultinomialLogisticRegression().fit(X, y, 3)
        b = MultinomialLogisticRegression().fit(X, y, 3)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)

    def test_empty_fit_rejected(self):
        with pytest.raises(ValueError):
            KNearestNeighbors().fit(np.zeros((0, 2)), np.zeros(0, dtype=int), 2)
        with pytest.raises(ValueError):
            MultinomialLogisticRegression().fit(np.zeros((0, 2)),
                                                np.zeros(0, dtype=int), 2)


class TestExperimentConfig:
    def test_regimes_are_canonicalized(self):
        cfg = ExperimentConfig(regimes=("mixed", "original"))
        assert cfg.regimes == ("original", "mixed")

    @pytest.mark.parametrize("kwargs", [
        {"train_fraction": 0.0},
        {"train_fraction": 1.0},
        {"runs": 0},
        {"regimes": ()},
        {"regimes": ("weird",)},
        {"synthetic_samples": 0},
    ])
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)


@pytest.fixture(scope="module")
def blob_report(blobs4):
    hyper = Hyperparameters(neurons_per_class=5, max_iter=20, seed=0)
    config = ExperimentConfig(runs=3, seed=40, synthetic_samples=200,
                              classifier="logreg")
    return run_experiment(blobs4, hyper, config), config


class TestRunExperiment:
    def test_separable_blobs_score_high_everywhere(self, blob_report):
        report, _ = blob_report
        for name in ("original", "synthetic_only", "mixed"):
            assert report.regimes[name].mean_accuracy >= 0.95

    def test_no_identity_leak_across_runs(self, blob_report):
        report, _ = blob_report
        for run in report.per_run:
            assert not set(run["train_ids"]) & set(run["test_ids"])

    def test_aggregates_match_per_run_records(self, blob_report):
        report, config = blob_report
        for regime, agg in report.regimes.items():
            accs = [run["regimes"][regime]["accuracy"] for run in report.per_run]
            assert agg.mean_accuracy == pytest.approx(np.mean(accs), rel=1e-12)
            assert agg.std_accuracy == pytest.approx(np.std(accs), rel=1e-12, abs=1e-15)
            f1s = [run["regimes"][regime]["macro_f1"] for run in report.per_run]
            assert agg.macro_f1 == pytest.approx(np.mean(f1s), rel=1e-12)

    def test_mixed_training_set_size(self, blob_report, blobs4):
        report, config = blob_report
        train_size = report.regimes["original"].train_size
        assert (report.regimes["mixed"].train_size
                == train_size + config.synthetic_samples)
        assert report.regimes["synthetic_only"].train_size == config.synthetic_samples

    def test_confusion_rows_sum_to_hundred(self, blob_report):
        report, _ = blob_report
        for regime in report.regimes.values():
            assert np.allclose(regime.confusion_percent.sum(axis=1), 100.0, atol=0.1)

    def test_fidelity_only_for_synthetic_regimes(self, blob_report):
        report, _ = blob_report
        assert report.regimes["original"].fidelity_mse is None
        assert report.regimes["synthetic_only"].fidelity_mse is not None
        assert report.regimes["synthetic_only"].fidelity_mse >= 0.0

    def test_single_run_has_zero_std(self, blobs2):
        hyper = Hyperparameters(neurons_per_class=3, max_iter=5, seed=0)
        config = ExperimentConfig(runs=1, seed=0, synthetic_samples=40,
                                  regimes=("original",))
        report = run_experiment(blobs2, hyper, config)
        assert report.regimes["original"].std_accuracy == 0.0

    def test_majority_classifier_matches_count_oracle(self, blobs2):
        class Majority:
            def fit(self, X, y, num_classes):
                self.label = int(np.bincount(y, minlength=num_classes).argmax())
                return self

            def predict(self, X):
                return np.full(X.shape[0], self.label, dtype=np.int64)

        register_classifier("majority", Majority)
        hyper = Hyperparameters(neurons_per_class=3, max_iter=2, seed=0)
        config = ExperimentConfig(runs=1, seed=7, synthetic_samples=10,
                                  regimes=("original",), classifier="majority")
        report = run_experiment(blobs2, hyper, config)

        train, test = stratified_split(blobs2, 0.7, seed=7)
        majority_label = int(np.bincount(train.labels).argmax())
        expected = (test.labels == majority_label).mean()
        assert report.regimes["original"].mean_accuracy == pytest.approx(expected)

    def test_report_serializes_to_json(self, blob_report):
        report, _ = blob_report
        doc = json.loads(report.to_json())
        assert set(doc["regimes"]) == {"original", "synthetic_only", "mixed"}
        assert doc["config"]["runs"] == 3
        assert len(doc["per_run"]) == 3

    def test_report_table_mentions_all_regimes(self, blob_report):
        report, _ = blob_report
        table = format_report_table(report)
        for token in ("Avg Acc", "Precision", "Recall", "F1 Score",
                      "Train Runtime", "MSE", "original", "synthetic_only",
                      "mixed"):
            assert token in table

    def test_determinism_excluding_timing(self, blobs2):
        hyper = Hyperparameters(neurons_per_class=3, max_iter=5, seed=0)
        config = ExperimentConfig(runs=2, seed=3, synthetic_samples=30)

        def scrub(doc):
            doc = json.loads(json.dumps(doc))
            for regime in doc["regimes"].values():
                regime.pop("train_time_ms")
            for run in doc["per_run"]:
                run.pop("sng_train_ms")
            return doc

        a = scrub(run_experiment(blobs2, hyper, config).to_dict())
        b = scrub(run_experiment(blobs2, hyper, config).to_dict())
        assert a == b

    def test_unknown_classifier_rejected(self, blobs2):
        hyper = Hyperparameters(max_iter=1)
        config = ExperimentConfig(runs=1, classifier="nope", synthetic_samples=10)
        with pytest.raises(ValueError, match="unknown classifier"):
            run_experiment(blobs2, hyper, config)
