import json

import numpy as np
import pytest

from omltune.dataspace import DataSchema, Dataset, OnlineScaler
from omltune.evaluation import (
    EvaluationError,
    HorizonEvalConfig,
    WeightVector,
    eval_oml_horizon,
    weighted_objective,
)
from omltune.learners import HoeffdingTreeModel, ScaledClassifier
from omltune.metrics import MetricDirection, compute_metric


def stub_data(train_labels, test_labels):
    schema = DataSchema(("x1",), "y")
    train = Dataset(
        schema, np.zeros((len(train_labels), 1)), np.array(train_labels), "stub"
    )
    test = Dataset(schema, np.zeros((len(test_labels), 1)), np.array(test_labels), "stub")
    return train, test


class TestGoldenTrace:
    def test_constant_one_two_windows(self, constant_classifier_cls):
        train, test = stub_data([0, 1, 0, 1], [1, 1, 0, 1])
        res = eval_oml_horizon(
            constant_classifier_cls(proba=1.0),
            train,
            test,
            HorizonEvalConfig(horizon=2, metric="accuracy_score"),
        )
        assert [w.metric_value for w in res.windows] == [1.0, 0.5]
        assert res.metric_mean == 0.75
        assert res.confusion.tp == 3 and res.confusion.fp == 1

    def test_single_window_equals_full_metric(self, constant_classifier_cls):
        rng = np.random.default_rng(6)
        labels = rng.integers(0, 2, size=37)
        train, test = stub_data([0, 1], list(labels))
        res = eval_oml_horizon(
            constant_classifier_cls(proba=0.7),
            train,
            test,
            HorizonEvalConfig(horizon=len(labels), metric="accuracy_score", oml_grace_period=2),
        )
        assert len(res.windows) == 1
        full = compute_metric("accuracy_score", labels, np.full(len(labels), 0.7))
        assert res.metric_mean == pytest.approx(full)

    def test_grace_none_consumes_horizon_rows(self, constant_classifier_cls):
        train, test = stub_data([0, 1] * 20, [1, 0] * 10)
        model = constant_classifier_cls()
        eval_oml_horizon(
            model, train, test, HorizonEvalConfig(horizon=25, metric="accuracy_score")
        )
        # 25 grace learns plus 20 test learns
        assert model.learned == 45

    def test_explicit_grace_period(self, constant_classifier_cls):
        train, test = stub_data([0, 1] * 20, [1, 0] * 10)
        model = constant_classifier_cls()
        eval_oml_horizon(
            model,
            train,
            test,
            HorizonEvalConfig(horizon=5, metric="accuracy_score", oml_grace_period=7),
        )
        assert model.learned == 27

    def test_window_count(self, constant_classifier_cls):
        train, test = stub_data([0, 1] * 5, [1] * 23)
        res = eval_oml_horizon(
            constant_classifier_cls(),
            train,
            test,
            HorizonEvalConfig(horizon=5, metric="accuracy_score", oml_grace_period=2),
        )
        assert len(res.windows) == 5  # ceil(23 / 5)

    def test_deterministic_repeat_with_time_masked(self, constant_classifier_cls):
        train, test = stub_data([0, 1, 1, 0], [1, 1, 0, 1, 0, 0])

        def run():
            res = eval_oml_horizon(
                constant_classifier_cls(proba=0.9),
                train,
                test,
                HorizonEvalConfig(horizon=2, metric="accuracy_score"),
            )
            payload = {
                "windows": [(w.index, w.metric_value, w.memory_mb) for w in res.windows],
                "metric_mean": res.metric_mean,
                "confusion": res.confusion.as_dict(),
                "scores": res.scores.tolist(),
                "truths": res.truths.tolist(),
            }
            return json.dumps(payload, sort_keys=True)

        assert run() == run()


class TestValidation:
    def test_empty_test_rejected(self, constant_classifier_cls):
        schema = DataSchema(("x1",), "y")
        train = Dataset(schema, np.zeros((4, 1)), np.array([0, 1, 0, 1]), "s")
        test = Dataset(schema, np.zeros((0, 1)), np.array([], dtype=int), "s")
        with pytest.raises(EvaluationError):
            eval_oml_horizon(
                constant_classifier_cls(), train, test,
                HorizonEvalConfig(horizon=2, metric="accuracy_score"),
            )

    def test_grace_exceeding_train_rejected(self, constant_classifier_cls):
        train, test = stub_data([0, 1], [1, 0])
        with pytest.raises(EvaluationError):
            eval_oml_horizon(
                constant_classifier_cls(), train, test,
                HorizonEvalConfig(horizon=1, metric="accuracy_score", oml_grace_period=10),
            )

    def test_all_windows_undefined_fails_loudly(self, constant_classifier_cls):
        # single-class windows make AUC undefined everywhere
        train, test = stub_data([0, 1, 0, 1], [1, 1, 1, 1])
        with pytest.raises(EvaluationError):
            eval_oml_horizon(
                constant_classifier_cls(), train, test,
                HorizonEvalConfig(horizon=2, metric="roc_auc_score"),
            )

    def test_partially_undefined_windows_are_excluded(self, constant_classifier_cls):
        # first window single-class (undefined AUC), second mixed
        train, test = stub_data([0, 1, 0, 1], [1, 1, 0, 1])
        res = eval_oml_horizon(
            constant_classifier_cls(proba=0.8), train, test,
            HorizonEvalConfig(horizon=2, metric="roc_auc_score"),
        )
        assert res.windows[0].metric_value is None
        assert res.metric_mean == res.windows[1].metric_value


class TestWeightedObjective:
    def test_metric_only(self):
        assert weighted_objective(
            0.75, MetricDirection.MAXIMIZE, 9.0, 9.0, WeightVector(1, 0, 0)
        ) == -0.75

    def test_time_only(self):
        assert weighted_objective(
            0.75, MetricDirection.MAXIMIZE, 2.5, 9.0, WeightVector(0, 1, 0)
        ) == 2.5

    def test_memory_only(self):
        assert weighted_objective(
            0.75, MetricDirection.MAXIMIZE, 9.0, 3.2, WeightVector(0, 0, 1)
        ) == 3.2

    def test_minimized_metric_keeps_sign(self):
        assert weighted_objective(
            0.2, MetricDirection.MINIMIZE, 0.0, 0.0, WeightVector(1, 0, 0)
        ) == 0.2

    def test_negative_weights_allowed(self):
        value = weighted_objective(
            0.5, MetricDirection.MAXIMIZE, 1.0, 2.0, WeightVector(-1, -2, -3)
        )
        assert value == pytest.approx(0.5 - 2.0 - 6.0)

    def test_undefined_metric_raises(self):
        with pytest.raises(EvaluationError):
            weighted_objective(None, MetricDirection.MAXIMIZE, 1.0, 1.0, WeightVector())

    def test_argmin_matches_argmax_of_metric(self, constant_classifier_cls):
        rng = np.random.default_rng(8)
        metric_means = rng.uniform(size=20)
        objectives = [
            weighted_objective(m, MetricDirection.MAXIMIZE, rng.uniform(), rng.uniform(), WeightVector(1, 0, 0))
            for m in metric_means
        ]
        assert int(np.argmin(objectives)) == int(np.argmax(metric_means))


class TestAggregates:
    def test_concatenated_windows_reproduce_full_metric(self):
        rng = np.random.default_rng(12)
        n = 230
        features = rng.uniform(-1, 1, size=(n + 50, 1))
        labels = (features[:, 0] > 0).astype(int)
        schema = DataSchema(("x1",), "y")
        train = Dataset(schema, features[:50], labels[:50], "s")
        test = Dataset(schema, features[50:], labels[50:], "s")
        model = ScaledClassifier(OnlineScaler("none"), HoeffdingTreeModel(grace_period=20))
        res = eval_oml_horizon(
            model, train, test, HorizonEvalConfig(horizon=25, metric="accuracy_score")
        )
        full = compute_metric("accuracy_score", res.truths, res.scores)
        weighted = sum(
            w.metric_value * (min((w.index + 1) * 25, n) - w.index * 25)
            for w in res.windows
        )
        assert weighted / n == pytest.approx(full)

    def test_elapsed_monotone_and_memory_positive(self, constant_classifier_cls):
        train, test = stub_data([0, 1] * 10, [1, 0] * 25)
        res = eval_oml_horizon(
            constant_classifier_cls(), train, test,
            HorizonEvalConfig(horizon=10, metric="accuracy_score"),
        )
        elapsed = [w.elapsed_s for w in res.windows]
        assert all(b >= a for a, b in zip(elapsed, elapsed[1:]))
        assert res.total_time_s >= elapsed[-1] - 1e-12
        assert all(w.memory_mb > 0 for w in res.windows)
        assert res.final_memory_mb == res.windows[-1].memory_mb
        assert res.peak_memory_mb >= res.final_memory_mb

    def test_objective_consistency(self, constant_classifier_cls):
        train, test = stub_data([0, 1, 1, 0], [1, 0, 1, 1])
        w = WeightVector(1.0, 0.5, 0.25)
        res = eval_oml_horizon(
            constant_classifier_cls(), train, test,
            HorizonEvalConfig(horizon=2, metric="accuracy_score"), weights=w,
        )
        assert res.objective == weighted_objective(
            res.metric_mean, res.direction, res.total_time_s, res.final_memory_mb, w
        )
