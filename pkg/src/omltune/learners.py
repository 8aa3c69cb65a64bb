"""Incremental binary classifiers with per-instance learn/predict.

Every learner follows the same behavioral contract:

* ``learn_one(x, y)`` consumes one instance (``x`` a 1-D float vector,
  ``y`` in {0, 1}) and mutates the model,
* ``predict_proba_one(x)`` returns p(y=1) in [0, 1] and never mutates
  state,
* ``predict_one(x)`` thresholds at 0.5 (ties map to class 1),
* ``memory_bytes()`` is a deterministic size estimate built from the
  documented per-node constants below.

Models are single-owner mutable state: they may be handed between
threads but never mutated concurrently.
"""

from __future__ import annotations

import math
from typing import Protocol, runtime_checkable

import numpy as np

# Memory model constants (bytes).  These are bookkeeping conventions, not
# allocator measurements: estimates must be reproducible across platforms
# and monotone in the amount of structure a model has grown.
LOGISTIC_BASE_BYTES = 64
WEIGHT_BYTES = 8
SPLIT_NODE_BYTES = 56
LEAF_BASE_BYTES = 88
CLASS_ENTRY_BYTES = 16
GAUSS_STAT_BYTES = 32

# floor applied to Gaussian variances in likelihood computations
VARIANCE_FLOOR = 1e-12

LEAF_PREDICTION_MODES = ("mc", "nb", "nba")


@runtime_checkable
class OnlineClassifier(Protocol):
    def learn_one(self, x: np.ndarray, y: int) -> None: ...

    def predict_proba_one(self, x: np.ndarray) -> float: ...

    def predict_one(self, x: np.ndarray) -> int: ...

    def memory_bytes(self) -> int: ...


def _check_instance(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D feature vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    return x


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


class LogisticModel:
    """Online logistic regression trained by per-instance gradient steps.

    The update is plain SGD on the log-loss with L2 shrinkage applied to
    the weights only: ``w <- w - lr * ((p - y) * x + l2 * w)`` and
    ``b <- b - lr * (p - y)``.
    """

    def __init__(self, lr: float = 0.05, l2: float = 0.0):
        if lr < 0:
            raise ValueError("lr must be non-negative")
        if l2 < 0:
            raise ValueError("l2 must be non-negative")
        self.lr = float(lr)
        self.l2 = float(l2)
        self.weights: np.ndarray | None = None
        self.bias = 0.0

    def _raw(self, x: np.ndarray) -> float:
        if self.weights is None:
            return self.bias
        return float(self.weights @ x) + self.bias

    def learn_one(self, x, y) -> None:
        x = _check_instance(x)
        if y not in (0, 1):
            raise ValueError("label must be 0 or 1")
        if self.weights is None:
            self.weights = np.zeros_like(x)
        elif self.weights.shape != x.shape:
            raise ValueError("feature dimension changed mid-stream")
        err = _sigmoid(self._raw(x)) - y
        self.weights = self.weights - self.lr * (err * x + self.l2 * self.weights)
        self.bias = self.bias - self.lr * err

    def predict_proba_one(self, x) -> float:
        x = _check_instance(x)
        return _sigmoid(self._raw(x))

    def predict_one(self, x) -> int:
        return 1 if self.predict_proba_one(x) >= 0.5 else 0

    def memory_bytes(self) -> int:
        d = 0 if self.weights is None else self.weights.shape[0]
        return LOGISTIC_BASE_BYTES + d * WEIGHT_BYTES + WEIGHT_BYTES


def hoeffding_bound(range_r: float, delta: float, n: int) -> float:
    """Confidence radius sqrt(R^2 ln(1/delta) / (2n)) for a mean of n draws."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must lie in (0, 1]")
    return math.sqrt(range_r * range_r * math.log(1.0 / delta) / (2.0 * n))


def _entropy_bits(counts) -> float:
    total = float(sum(counts))
    if total <= 0.0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0.0:
            p = c / total
            h -= p * math.log2(p)
    return h


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


class _GaussianStat:
    """Welford running count/mean/M2 for one (class, feature) pair."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return self.m2 / self.count

    def std(self) -> float:
        return math.sqrt(max(self.variance(), VARIANCE_FLOOR))

    def pdf(self, value: float) -> float:
        var = max(self.variance(), VARIANCE_FLOOR)
        return math.exp(-0.5 * (value - self.mean) ** 2 / var) / math.sqrt(2.0 * math.pi * var)

    def cdf(self, value: float) -> float:
        return _norm_cdf((value - self.mean) / self.std())


class _Leaf:
    __slots__ = (
        "depth",
        "class_counts",
        "stats",
        "seen_since_eval",
        "mc_correct",
        "nb_correct",
        "n_features",
    )

    def __init__(self, depth: int):
        self.depth = depth
        self.class_counts = [0, 0]
        self.stats: list[list[_GaussianStat]] | None = None  # [class][feature]
        self.seen_since_eval = 0
        self.mc_correct = 0
        self.nb_correct = 0
        self.n_features = 0

    def total(self) -> int:
        return self.class_counts[0] + self.class_counts[1]

    def ensure_stats(self, n_features: int) -> None:
        if self.stats is None:
            self.n_features = n_features
            self.stats = [
                [_GaussianStat() for _ in range(n_features)] for _ in range(2)
            ]

    def proba_mc(self) -> float:
        total = self.total()
        if total == 0:
            return 0.5
        return self.class_counts[1] / total

    def proba_nb(self, x: np.ndarray) -> float:
        total = self.total()
        if total == 0 or self.stats is None:
            return 0.5
        # Laplace +1 smoothed class priors; per-feature Gaussian likelihoods
        joint = []
        for cls in (0, 1):
            log_p = math.log((self.class_counts[cls] + 1.0) / (total + 2.0))
            if self.class_counts[cls] > 0:
                for j in range(self.n_features):
                    st = self.stats[cls][j]
                    if st.count > 0:
                        log_p += math.log(max(st.pdf(float(x[j])), 1e-300))
            joint.append(log_p)
        m = max(joint)
        e0, e1 = math.exp(joint[0] - m), math.exp(joint[1] - m)
        return e1 / (e0 + e1)


class _SplitNode:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature: int, threshold: float, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class HoeffdingTreeModel:
    """Incremental decision tree for binary targets on numeric features.

    Leaves accumulate per-class Gaussian statistics per feature; every
    ``grace_period`` instances routed to a leaf the candidate splits are
    scored by information gain (in bits, so the heuristic range is 1) and
    the leaf splits when the best feature beats the runner-up by more
    than the Hoeffding radius, or when that radius has shrunk below the
    tie threshold ``tau``.

    Candidate thresholds per feature are the midpoint between the two
    class means plus each class mean shifted by one standard deviation:
    a deterministic, bounded set.  ``binary_split`` is accepted for
    config-echo compatibility; numeric threshold tests are binary anyway.
    """

    def __init__(
        self,
        grace_period: int = 200,
        delta: float = 1e-7,
        tau: float = 0.05,
        leaf_prediction: str = "nba",
        nb_threshold: int = 0,
        splitter: str = "GaussianSplitter",
        binary_split: bool = False,
        max_depth: int | float = math.inf,
    ):
        if grace_period < 1:
            raise ValueError("grace_period must be positive")
        if not (0.0 < delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if leaf_prediction not in LEAF_PREDICTION_MODES:
            raise ValueError(f"unknown leaf_prediction {leaf_prediction!r}")
        if splitter != "GaussianSplitter":
            raise ValueError(f"unsupported splitter {splitter!r}")
        if nb_threshold < 0:
            raise ValueError("nb_threshold must be non-negative")
        self.grace_period = int(grace_period)
        self.delta = float(delta)
        self.tau = float(tau)
        self.leaf_prediction = leaf_prediction
        self.nb_threshold = nb_threshold
        self.splitter = splitter
        self.binary_split = bool(binary_split)
        self.max_depth = max_depth if max_depth == math.inf else int(max_depth)
        self.root: _Leaf | _SplitNode = _Leaf(depth=0)
        self.n_features: int | None = None

    # -- routing ---------------------------------------------------------

    def _route(self, x: np.ndarray) -> _Leaf:
        node = self.root
        while isinstance(node, _SplitNode):
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    def _route_with_parent(self, x: np.ndarray):
        parent = None
        side = None
        node = self.root
        while isinstance(node, _SplitNode):
            parent = node
            side = "left" if x[node.feature] <= node.threshold else "right"
            node = getattr(node, side)
        return node, parent, side

    # -- learning --------------------------------------------------------

    def learn_one(self, x, y) -> None:
        x = _check_instance(x)
        if y not in (0, 1):
            raise ValueError("label must be 0 or 1")
        if self.n_features is None:
            self.n_features = x.shape[0]
        elif x.shape[0] != self.n_features:
            raise ValueError("feature dimension changed mid-stream")
        leaf, parent, side = self._route_with_parent(x)
        leaf.ensure_stats(self.n_features)
        if self.leaf_prediction == "nba":
            # track the mc-vs-nb accuracy race before the stats see x
            if leaf.proba_mc() >= 0.5:
                mc_pred = 1
            else:
                mc_pred = 0
            nb_pred = 1 if leaf.proba_nb(x) >= 0.5 else 0
            if mc_pred == y:
                leaf.mc_correct += 1
            if nb_pred == y:
                leaf.nb_correct += 1
        leaf.class_counts[y] += 1
        for j in range(self.n_features):
            leaf.stats[y][j].update(float(x[j]))
        leaf.seen_since_eval += 1
        if leaf.seen_since_eval >= self.grace_period and leaf.depth < self.max_depth:
            leaf.seen_since_eval = 0
            self._attempt_split(leaf, parent, side)

    def _candidate_thresholds(self, leaf: _Leaf, feature: int) -> list[float]:
        cands = []
        present = [cls for cls in (0, 1) if leaf.stats[cls][feature].count > 0]
        if len(present) == 2:
            m0 = leaf.stats[0][feature].mean
            m1 = leaf.stats[1][feature].mean
            cands.append(0.5 * (m0 + m1))
        for cls in present:
            st = leaf.stats[cls][feature]
            if st.count >= 2:
                cands.append(st.mean - st.std())
                cands.append(st.mean + st.std())
        return sorted(set(cands))

    def _gain(self, leaf: _Leaf, feature: int, threshold: float) -> float:
        left = [0.0, 0.0]
        right = [0.0, 0.0]
        for cls in (0, 1):
            n_cls = leaf.class_counts[cls]
            if n_cls == 0:
                continue
            frac_left = leaf.stats[cls][feature].cdf(threshold)
            left[cls] = n_cls * frac_left
            right[cls] = n_cls * (1.0 - frac_left)
        total = leaf.total()
        w_left = (left[0] + left[1]) / total
        w_right = (right[0] + right[1]) / total
        parent_h = _entropy_bits(leaf.class_counts)
        return parent_h - (w_left * _entropy_bits(left) + w_right * _entropy_bits(right))

    def _attempt_split(self, leaf: _Leaf, parent, side) -> None:
        n = leaf.total()
        if n < 2 or leaf.class_counts[0] == 0 or leaf.class_counts[1] == 0:
            return
        # best gain per feature; the decision compares the top two features
        best_per_feature: list[tuple[float, int, float]] = []
        for j in range(self.n_features):
            best = None
            for t in self._candidate_thresholds(leaf, j):
                g = self._gain(leaf, j, t)
                if best is None or g > best[0]:
                    best = (g, j, t)
            if best is not None:
                best_per_feature.append(best)
        if not best_per_feature:
            return
        best_per_feature.sort(key=lambda item: (-item[0], item[1]))
        g_best, feature, threshold = best_per_feature[0]
        g_second = best_per_feature[1][0] if len(best_per_feature) > 1 else 0.0
        if g_best <= 0.0:
            return
        eps = hoeffding_bound(1.0, self.delta, n)
        if (g_best - g_second > eps) or (eps < self.tau):
            child_depth = leaf.depth + 1
            new_node = _SplitNode(
                feature, threshold, _Leaf(child_depth), _Leaf(child_depth)
            )
            if parent is None:
                self.root = new_node
            else:
                setattr(parent, side, new_node)

    # -- prediction ------------------------------------------------------

    def _leaf_proba(self, leaf: _Leaf, x: np.ndarray) -> float:
        if leaf.total() == 0:
            return 0.5
        if self.leaf_prediction == "mc":
            return leaf.proba_mc()
        if self.leaf_prediction == "nb":
            return leaf.proba_nb(x)
        # nba: switch to naive Bayes only once the leaf has enough weight
        # and the running race says nb is at least as accurate as mc
        if leaf.total() >= self.nb_threshold and leaf.nb_correct >= leaf.mc_correct:
            return leaf.proba_nb(x)
        return leaf.proba_mc()

    def predict_proba_one(self, x) -> float:
        x = _check_instance(x)
        return self._leaf_proba(self._route(x), x)

    def predict_one(self, x) -> int:
        return 1 if self.predict_proba_one(x) >= 0.5 else 0

    # -- inspection ------------------------------------------------------

    def depth(self) -> int:
        def walk(node) -> int:
            if isinstance(node, _Leaf):
                return node.depth
            return max(walk(node.left), walk(node.right))

        return walk(self.root)

    def n_nodes(self) -> int:
        def walk(node) -> int:
            if isinstance(node, _Leaf):
                return 1
            return 1 + walk(node.left) + walk(node.right)

        return walk(self.root)

    def memory_bytes(self) -> int:
        d = self.n_features or 0
        # leaves are charged for their full per-feature payload up front so
        # that splitting can never shrink the estimate
        leaf_bytes = LEAF_BASE_BYTES + 2 * (CLASS_ENTRY_BYTES + d * GAUSS_STAT_BYTES)

        def walk(node) -> int:
            if isinstance(node, _Leaf):
                return leaf_bytes
            return SPLIT_NODE_BYTES + walk(node.left) + walk(node.right)

        return walk(self.root)


def build_model(model_id: str, config: dict):
    """Construct a classifier from an effective hyperparameter mapping."""
    cfg = dict(config)
    if model_id == "hoeffding_tree":
        return HoeffdingTreeModel(
            grace_period=int(cfg["grace_period"]),
            delta=float(cfg["delta"]),
            tau=float(cfg["tau"]),
            leaf_prediction=str(cfg["leaf_prediction"]),
            nb_threshold=int(cfg["nb_threshold"]),
            splitter=str(cfg["splitter"]),
            binary_split=str(cfg["binary_split"]) in ("1", "True", "true"),
            max_depth=int(cfg["max_depth"]),
        )
    if model_id == "logistic_regression":
        return LogisticModel(lr=float(cfg["lr"]), l2=float(cfg["l2"]))
    raise ValueError(f"unknown model id {model_id!r}")


class ScaledClassifier:
    """Pipeline of an online scaler feeding a classifier.

    The scaler learns only during ``learn_one`` (learn-then-transform);
    prediction applies the current scaling without mutating it, keeping
    ``predict_proba_one`` pure.
    """

    def __init__(self, scaler, model):
        self.scaler = scaler
        self.model = model

    def learn_one(self, x, y) -> None:
        self.model.learn_one(self.scaler.learn_transform(x), y)

    def predict_proba_one(self, x) -> float:
        return self.model.predict_proba_one(self.scaler.transform(x))

    def predict_one(self, x) -> int:
        return 1 if self.predict_proba_one(x) >= 0.5 else 0

    def memory_bytes(self) -> int:
        return self.scaler.memory_bytes() + self.model.memory_bytes()
