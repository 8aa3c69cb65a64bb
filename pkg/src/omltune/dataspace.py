"""Data ingestion, splitting, summaries and online scalers.

Datasets are ordered streams of feature rows with a binary target in the
last column.  Row order is the stream order: nothing in this module ever
shuffles implicitly, and train/test splitting is a sequential cut so that
prequential evaluation sees instances in their original order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SEA_THRESHOLDS = (8.0, 9.0, 7.0, 9.5)


class IngestionError(ValueError):
    """Raised when a CSV file violates the expected layout."""


class ConfigurationError(ValueError):
    """Raised for invalid split or generator parameters."""


@dataclass(frozen=True)
class DataSchema:
    feature_names: tuple[str, ...]
    target_name: str

    def __post_init__(self):
        if len(self.feature_names) < 1:
            raise ValueError("need at least one feature column")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        if any(not name for name in self.feature_names) or not self.target_name:
            raise ValueError("column names must be non-empty")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.feature_names + (self.target_name,)


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered stream of (features, label) rows."""

    schema: DataSchema
    features: np.ndarray  # (n, n_features) float64
    labels: np.ndarray  # (n,) int64 in {0, 1}
    source: str

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labs = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[1] != self.schema.n_features:
            raise ValueError("feature matrix does not match schema")
        if labs.shape != (feats.shape[0],):
            raise ValueError("labels must align with feature rows")
        if labs.size and (labs.min() < 0 or labs.max() > 1):
            raise ValueError("labels must be 0 or 1")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.schema.n_features


@dataclass(frozen=True)
class SplitSpec:
    test_size: float
    n_total: int | None = None

    def validate(self, dataset_len: int | None = None) -> None:
        if not (0.0 < self.test_size < 1.0):
            raise ConfigurationError(
                f"test_size must lie strictly between 0 and 1, got {self.test_size}"
            )
        if self.n_total is not None:
            if self.n_total < 1:
                raise ConfigurationError("n_total must be positive")
            if dataset_len is not None and self.n_total > dataset_len:
                raise ConfigurationError(
                    f"n_total={self.n_total} exceeds dataset length {dataset_len}"
                )


@dataclass(frozen=True)
class ColumnSummary:
    count: float
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "25%": self.q25,
            "50%": self.q50,
            "75%": self.q75,
            "max": self.max,
        }


@dataclass(frozen=True)
class DataSummary:
    columns: tuple[str, ...]
    stats: tuple[ColumnSummary, ...]

    def as_dict(self) -> dict:
        return {col: st.as_dict() for col, st in zip(self.columns, self.stats)}


def load_csv(path: str | Path) -> Dataset:
    """Load a binary-classification CSV with a header and target last.

    Comma-separated, '.' decimal point, UTF-8, LF or CRLF line ends.  The
    target column must contain only 0/1 (the spellings 0.0 and 1.0 are
    accepted).
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path.name}: file is empty, expected a header row")
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise IngestionError(f"{path.name}: need at least one feature column plus a target")
        if all(_parses_as_float(cell) for cell in header):
            raise IngestionError(f"{path.name}: first row looks numeric, expected column names")
        n_cols = len(header)
        feats: list[list[float]] = []
        labels: list[int] = []
        for row_idx, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise IngestionError(
                    f"{path.name}: row {row_idx} has {len(row)} cells, expected {n_cols}"
                )
            values = []
            for col_idx, cell in enumerate(row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise IngestionError(
                        f"{path.name}: row {row_idx}, column {header[col_idx]!r}: "
                        f"non-numeric value {cell.strip()!r}"
                    ) from None
            target = values[-1]
            if target not in (0.0, 1.0):
                raise IngestionError(
                    f"{path.name}: row {row_idx}: target must be 0 or 1, got {row[-1].strip()!r}"
                )
            feats.append(values[:-1])
            labels.append(int(target))
    schema = DataSchema(feature_names=tuple(header[:-1]), target_name=header[-1])
    features = np.asarray(feats, dtype=float).reshape(len(feats), schema.n_features)
    return Dataset(
        schema=schema,
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        source=str(path),
    )


def _parses_as_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def generate_sea(
    n: int,
    variant_schedule: list[tuple[int, int]],
    noise_frac: float = 0.0,
    seed: int = 0,
) -> Dataset:
    """Synthetic concept-drift stream with three uniform features in [0, 10].

    The label is 1 iff x1 + x2 exceeds the active variant's threshold
    (8, 9, 7, 9.5 for variants 0..3); switching variants along the
    schedule models sudden drift.  With probability ``noise_frac`` the
    label is flipped.  Deterministic under ``seed``.
    """
    if not (0.0 <= noise_frac < 0.5):
        raise ConfigurationError(f"noise_frac must lie in [0, 0.5), got {noise_frac}")
    lengths = [length for _, length in variant_schedule]
    if sum(lengths) != n or any(length < 0 for length in lengths):
        raise ConfigurationError(
            f"schedule lengths {lengths} must be non-negative and sum to n={n}"
        )
    for variant, _ in variant_schedule:
        if variant not in (0, 1, 2, 3):
            raise ConfigurationError(f"unknown SEA variant {variant}")
    rng = np.random.default_rng(seed)
    features = rng.uniform(0.0, 10.0, size=(n, 3))
    thresholds = np.concatenate(
        [np.full(length, SEA_THRESHOLDS[variant]) for variant, length in variant_schedule]
    ) if n else np.empty(0)
    labels = (features[:, 0] + features[:, 1] > thresholds).astype(np.int64)
    if noise_frac > 0.0:
        flips = rng.uniform(size=n) < noise_frac
        labels = np.where(flips, 1 - labels, labels)
    schema = DataSchema(feature_names=("x1", "x2", "x3"), target_name="y")
    sched_tag = ",".join(f"{v}:{ln}" for v, ln in variant_schedule)
    return Dataset(
        schema=schema,
        features=features,
        labels=labels,
        source=f"sea(n={n},schedule=[{sched_tag}],noise={noise_frac},seed={seed})",
    )


def split_train_test(d: Dataset, s: SplitSpec) -> tuple[Dataset, Dataset]:
    """Sequential (order-preserving) train/test split.

    ``n_total`` truncates to the first rows of the stream before the cut;
    the train partition is the first ``floor(n * (1 - test_size))`` rows
    and the test partition is the remainder.
    """
    s.validate(len(d))
    n = len(d) if s.n_total is None else s.n_total
    # the epsilon keeps floor() on the intended side when n*(1-test_size)
    # is mathematically integral but lands a hair low in binary floats
    n_train = int(math.floor(n * (1.0 - s.test_size) + 1e-9))
    n_test = n - n_train
    if n_train < 1 or n_test < 1:
        raise ConfigurationError(
            f"split of {n} rows with test_size={s.test_size} leaves an empty partition"
        )
    train = Dataset(
        schema=d.schema,
        features=d.features[:n_train].copy(),
        labels=d.labels[:n_train].copy(),
        source=d.source,
    )
    test = Dataset(
        schema=d.schema,
        features=d.features[n_train:n].copy(),
        labels=d.labels[n_train:n].copy(),
        source=d.source,
    )
    return train, test


def summarize(d: Dataset) -> DataSummary:
    """Eight order statistics per column (features plus target).

    Quartiles use linear interpolation between order statistics; the
    standard deviation uses the sample (n-1) denominator, reported as 0
    for a single row.
    """
    if len(d) == 0:
        raise ConfigurationError("cannot summarize an empty dataset")
    matrix = np.column_stack([d.features, d.labels.astype(float)])
    stats = []
    for col in matrix.T:
        n = col.size
        q25, q50, q75 = np.percentile(col, [25.0, 50.0, 75.0], method="linear")
        stats.append(
            ColumnSummary(
                count=float(n),
                mean=float(np.mean(col)),
                std=float(np.std(col, ddof=1)) if n > 1 else 0.0,
                min=float(np.min(col)),
                q25=float(q25),
                q50=float(q50),
                q75=float(q75),
                max=float(np.max(col)),
            )
        )
    return DataSummary(columns=d.schema.column_names, stats=tuple(stats))


def display_sample(d: Dataset, cap: int = 1000, seed: int = 0) -> Dataset:
    """Uniform random subset of at most ``cap`` rows for display.

    Datasets at or under the cap are returned unchanged.  Sampled rows
    keep their stream order.
    """
    if cap < 1:
        raise ConfigurationError("cap must be at least 1")
    if len(d) <= cap:
        return d
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(d), size=cap, replace=False))
    return Dataset(
        schema=d.schema,
        features=d.features[idx].copy(),
        labels=d.labels[idx].copy(),
        source=d.source,
    )


SCALER_KINDS = ("standard", "minmax", "none")

# memory accounting constants (bytes): object header plus per-feature state
_SCALER_BASE_BYTES = 48
_SCALER_FEATURE_BYTES = 16


class OnlineScaler:
    """Single-pass feature scaler with running state.

    ``standard`` keeps Welford running mean/variance, ``minmax`` running
    min/max, ``none`` is the identity.  ``learn_transform`` updates the
    state with the incoming row and then transforms it; ``transform``
    applies the current state without updating (used at prediction time).
    """

    def __init__(self, kind: str):
        if kind not in SCALER_KINDS:
            raise ConfigurationError(f"unknown scaler kind {kind!r}")
        self.kind = kind
        self._n = 0
        self._mean: np.ndarray | None = None
        self._m2: np.ndarray | None = None
        self._min: np.ndarray | None = None
        self._max: np.ndarray | None = None

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("expected a 1-D feature vector")
        if self._n > 0:
            expected = self._mean.shape[0] if self.kind == "standard" else None
            if self.kind == "minmax":
                expected = self._min.shape[0]
            if expected is not None and x.shape[0] != expected:
                raise ValueError(f"expected {expected} features, got {x.shape[0]}")
        return x

    def learn_transform(self, x) -> np.ndarray:
        x = self._check_dim(x)
        if self.kind == "standard":
            if self._mean is None:
                self._mean = np.zeros_like(x)
                self._m2 = np.zeros_like(x)
            self._n += 1
            delta = x - self._mean
            self._mean = self._mean + delta / self._n
            self._m2 = self._m2 + delta * (x - self._mean)
        elif self.kind == "minmax":
            if self._min is None:
                self._min = x.copy()
                self._max = x.copy()
            else:
                self._min = np.minimum(self._min, x)
                self._max = np.maximum(self._max, x)
            self._n += 1
        else:
            self._n += 1
        return self.transform(x)

    def transform(self, x) -> np.ndarray:
        x = self._check_dim(x)
        if self.kind == "none" or self._n == 0:
            return x.copy()
        if self.kind == "standard":
            std = np.sqrt(self._m2 / self._n)
            out = np.zeros_like(x)
            nonzero = std > 0.0
            out[nonzero] = (x[nonzero] - self._mean[nonzero]) / std[nonzero]
            return out
        span = self._max - self._min
        out = np.zeros_like(x)
        nonzero = span > 0.0
        out[nonzero] = (x[nonzero] - self._min[nonzero]) / span[nonzero]
        return np.clip(out, 0.0, 1.0)

    def inverse_transform(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "none" or self._n == 0:
            return z.copy()
        if self.kind == "standard":
            std = np.sqrt(self._m2 / self._n)
            return z * std + self._mean
        return z * (self._max - self._min) + self._min

    def memory_bytes(self) -> int:
        d = 0
        if self.kind == "standard" and self._mean is not None:
            d = self._mean.shape[0]
        elif self.kind == "minmax" and self._min is not None:
            d = self._min.shape[0]
        return _SCALER_BASE_BYTES + d * _SCALER_FEATURE_BYTES


def scaler_learn_transform(sc: OnlineScaler, x) -> np.ndarray:
    return sc.learn_transform(x)


@dataclass(frozen=True)
class DatasetInfo:
    id: str
    n_rows: int
    n_features: int
    source: str


class DatasetRegistry:
    """Known datasets: the vendored fixture, the drift generator, userData CSVs.

    ``user_data_dir`` is scanned non-recursively for ``*.csv``; each file
    registers under its stem name.
    """

    SEA_DEFAULTS = {
        "n": 10000,
        "noise_frac": 0.0,
        "seed": 42,
        "schedule": [(0, 5000), (2, 5000)],
    }

    def __init__(self, user_data_dir: str | Path | None = None):
        self.user_data_dir = Path(user_data_dir) if user_data_dir else None
        self._cache: dict[str, Dataset] = {}

    def _user_csvs(self) -> dict[str, Path]:
        if self.user_data_dir is None or not self.user_data_dir.is_dir():
            return {}
        return {p.stem: p for p in sorted(self.user_data_dir.glob("*.csv"))}

    def ids(self) -> list[str]:
        return ["bananas", "sea"] + sorted(self._user_csvs())

    def load(self, dataset_id: str, sea_options: dict | None = None) -> Dataset:
        if dataset_id == "sea":
            opts = dict(self.SEA_DEFAULTS)
            if sea_options:
                opts.update(sea_options)
            schedule = [tuple(item) for item in opts["schedule"]]
            return generate_sea(
                n=int(opts["n"]),
                variant_schedule=schedule,
                noise_frac=float(opts["noise_frac"]),
                seed=int(opts["seed"]),
            )
        if dataset_id in self._cache:
            return self._cache[dataset_id]
        if dataset_id == "bananas":
            ds = load_csv(bananas_fixture_path())
        else:
            csvs = self._user_csvs()
            if dataset_id not in csvs:
                raise KeyError(dataset_id)
            ds = load_csv(csvs[dataset_id])
        self._cache[dataset_id] = ds
        return ds

    def info(self) -> list[DatasetInfo]:
        out = []
        for dataset_id in self.ids():
            ds = self.load(dataset_id)
            out.append(
                DatasetInfo(
                    id=dataset_id,
                    n_rows=len(ds),
                    n_features=ds.n_features,
                    source=ds.source,
                )
            )
        return out


def bananas_fixture_path() -> Path:
    return Path(__file__).parent / "data" / "bananas.csv"


_SUMMARY_ROWS = ("count", "mean", "std", "min", "25%", "50%", "75%", "max")


def format_summary(summary: dict) -> str:
    """Console table for a per-column statistics mapping.

    Accepts the ``DataSummary.as_dict()`` layout (also what the HTTP API
    serves), so CLI output and API payloads render identically.
    """
    columns = list(summary)
    width = max(12, *(len(c) + 2 for c in columns))
    lines = ["     " + "".join(f"{c:>{width + 1}}" for c in columns)]
    for row in _SUMMARY_ROWS:
        cells = "".join(f" {summary[c][row]:>{width}.6f}" for c in columns)
        lines.append(f"{row:<5}{cells}")
    return "\n".join(lines)
