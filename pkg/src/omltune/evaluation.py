"""Rolling-horizon prequential evaluation and the scalar objective.

An evaluation first trains the model on a short grace slice of the train
stream (no predictions are scored there, but time and memory are
accounted), then walks the test stream in consecutive windows of
``horizon`` instances.  Within each window every instance is scored
before any of them is learned, so the window metric is never tainted by
within-window learning.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataspace import Dataset
from .metrics import (
    ConfusionCounts,
    MetricDirection,
    compute_metric,
    confusion,
    direction_of,
    threshold_scores,
)

BYTES_PER_MIB = float(2**20)


class EvaluationError(RuntimeError):
    """Raised when an evaluation cannot produce a usable objective."""


@dataclass(frozen=True)
class HorizonEvalConfig:
    horizon: int
    metric: str
    oml_grace_period: int | None = None  # None resolves to horizon

    def validate(self, train_len: int | None = None) -> None:
        if self.horizon < 1:
            raise EvaluationError(f"horizon must be at least 1, got {self.horizon}")
        direction_of(self.metric)  # raises for unknown metric ids
        g = self.grace(train_len)
        if g < 0:
            raise EvaluationError("oml_grace_period must be non-negative")
        if train_len is not None and g > train_len:
            raise EvaluationError(
                f"grace period {g} exceeds the train partition ({train_len} rows)"
            )

    def grace(self, train_len: int | None = None) -> int:
        return self.horizon if self.oml_grace_period is None else self.oml_grace_period


@dataclass(frozen=True)
class WeightVector:
    y: float = 1.0
    time: float = 0.0
    mem: float = 0.0

    def validate(self) -> None:
        for name, value in (("y", self.y), ("time", self.time), ("mem", self.mem)):
            if not np.isfinite(value):
                raise EvaluationError(f"weight {name} must be finite")

    def as_list(self) -> list[float]:
        return [self.y, self.time, self.mem]


@dataclass(frozen=True)
class WindowRecord:
    index: int
    metric_value: float | None
    elapsed_s: float  # cumulative wall-clock over learn/predict calls
    memory_mb: float  # model memory after the window, MiB


@dataclass
class EvalResult:
    windows: list[WindowRecord]
    metric: str
    direction: MetricDirection
    metric_mean: float | None
    total_time_s: float
    final_memory_mb: float
    peak_memory_mb: float
    objective: float
    weights: WeightVector
    confusion: ConfusionCounts
    truths: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)


def weighted_objective(
    metric_mean: float | None,
    direction: MetricDirection,
    total_time_s: float,
    final_memory_mb: float,
    w: WeightVector,
) -> float:
    """Scalarize quality, time, and memory; the tuner minimizes the result.

    Maximized metrics enter with a flipped sign so that smaller is always
    better.
    """
    if metric_mean is None:
        raise EvaluationError("metric is undefined over every window")
    y_term = metric_mean if direction == MetricDirection.MINIMIZE else -metric_mean
    return w.y * y_term + w.time * total_time_s + w.mem * final_memory_mb


def eval_oml_horizon(
    model,
    train: Dataset,
    test: Dataset,
    cfg: HorizonEvalConfig,
    weights: WeightVector = WeightVector(),
) -> EvalResult:
    """Prequential rolling-horizon evaluation of a freshly built model."""
    cfg.validate(train_len=len(train))
    weights.validate()
    if len(test) == 0:
        raise EvaluationError("test partition is empty")
    grace = cfg.grace(len(train))
    direction = direction_of(cfg.metric)

    elapsed = 0.0
    peak_mb = 0.0

    # grace phase: train-only, nothing scored
    t0 = time.perf_counter()
    for i in range(grace):
        model.learn_one(train.features[i], int(train.labels[i]))
    elapsed += time.perf_counter() - t0
    peak_mb = max(peak_mb, model.memory_bytes() / BYTES_PER_MIB)

    windows: list[WindowRecord] = []
    all_truths: list[np.ndarray] = []
    all_scores: list[np.ndarray] = []
    n_test = len(test)
    h = cfg.horizon
    for w_idx, start in enumerate(range(0, n_test, h)):
        stop = min(start + h, n_test)
        truths = test.labels[start:stop]
        scores = np.empty(stop - start, dtype=float)
        t0 = time.perf_counter()
        for k, i in enumerate(range(start, stop)):
            scores[k] = model.predict_proba_one(test.features[i])
        for i in range(start, stop):
            model.learn_one(test.features[i], int(test.labels[i]))
        elapsed += time.perf_counter() - t0
        value = compute_metric(cfg.metric, truths, scores)
        mem_mb = model.memory_bytes() / BYTES_PER_MIB
        peak_mb = max(peak_mb, mem_mb)
        windows.append(
            WindowRecord(index=w_idx, metric_value=value, elapsed_s=elapsed, memory_mb=mem_mb)
        )
        all_truths.append(np.asarray(truths))
        all_scores.append(scores)

    defined = [w.metric_value for w in windows if w.metric_value is not None]
    metric_mean = float(np.mean(defined)) if defined else None
    truths_flat = np.concatenate(all_truths)
    scores_flat = np.concatenate(all_scores)
    final_mb = windows[-1].memory_mb
    objective = weighted_objective(metric_mean, direction, elapsed, final_mb, weights)
    return EvalResult(
        windows=windows,
        metric=cfg.metric,
        direction=direction,
        metric_mean=metric_mean,
        total_time_s=elapsed,
        final_memory_mb=final_mb,
        peak_memory_mb=peak_mb,
        objective=objective,
        weights=weights,
        confusion=confusion(truths_flat, threshold_scores(scores_flat)),
        truths=truths_flat,
        scores=scores_flat,
    )
