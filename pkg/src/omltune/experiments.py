"""Experiment persistence and run orchestration.

Experiments serialize to portable, versioned JSON: ``<prefix>.spec.json``
for the configuration and ``<prefix>.results.json`` for everything a
finished (or stopped) run produced.  Result files are written atomically
via a temp file and rename, so a results file that exists is always
complete.  Progress events stream to ``<prefix>.events.ndjson``.

The registry tracks live background runs and re-lists persisted ones
after a restart of the process.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dataspace import Dataset, DatasetRegistry, SCALER_KINDS, SplitSpec, split_train_test
from .evaluation import HorizonEvalConfig, WeightVector
from .metrics import METRIC_IDS
from .searchspace import (
    MODEL_IDS,
    SearchSpace,
    SpaceError,
    builtin_space,
    customize_space,
)
from .tuner import EventLog, ProgressEvent, TrialRecord, TunerControl, TunerState, run_tuning_loop

FORMAT_VERSION = 1
DEFAULT_DIR_ENV = "OMLTUNE_DIR"
DEFAULT_DIR = "./experiments"

STATE_SAVED = "saved"
STATE_RUNNING = "running"
STATE_FINISHED = "finished"
STATE_FAILED = "failed"
STATE_STOPPED = "stopped"


class ValidationError(ValueError):
    """Invalid experiment fields; ``problems`` lists every violation."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class WrongFileKindError(ValueError):
    pass


class DuplicatePrefixError(RuntimeError):
    pass


class UnknownExperimentError(KeyError):
    pass


@dataclass(frozen=True)
class DataOptions:
    source: str
    test_size: float = 0.3
    n_total: int | None = None
    scaler: str = "none"
    target_column: str | None = None  # accepted for compatibility; last column wins
    sea: dict | None = None  # generator options when source == "sea"


@dataclass(frozen=True)
class ExperimentSpec:
    prefix: str
    data: DataOptions
    model_id: str
    space: SearchSpace
    eval: HorizonEvalConfig
    weights: WeightVector
    control: TunerControl

    def validate(self) -> None:
        problems = []
        if self.control.prefix != self.prefix:
            problems.append("control.prefix must match the experiment prefix")
        problems.extend(self.control.validate())
        if not (0.0 < self.data.test_size < 1.0):
            problems.append(f"test_size must lie in (0, 1), got {self.data.test_size}")
        if self.data.n_total is not None and self.data.n_total < 2:
            problems.append("n_total must be at least 2")
        if self.data.scaler not in SCALER_KINDS:
            problems.append(f"unknown scaler {self.data.scaler!r}")
        if self.model_id not in MODEL_IDS:
            problems.append(f"unknown model_id {self.model_id!r}")
        elif self.space.model_id != self.model_id:
            problems.append("search space does not match model_id")
        if self.eval.horizon < 1:
            problems.append("horizon must be at least 1")
        if self.eval.oml_grace_period is not None and self.eval.oml_grace_period < 0:
            problems.append("oml_grace_period must be non-negative")
        if self.eval.metric not in METRIC_IDS:
            problems.append(f"unknown metric {self.eval.metric!r}")
        for name, value in zip(("y", "time", "mem"), self.weights.as_list()):
            if not np.isfinite(value):
                problems.append(f"weight {name} must be finite")
        if problems:
            raise ValidationError(problems)


# ---------------------------------------------------------------------------
# JSON serialization


def _space_to_json(space: SearchSpace) -> list[dict]:
    out = []
    for p in space.params:
        row = {
            "name": p.name,
            "kind": p.kind,
            "default": p.default,
            "lower": p.lower,
            "upper": p.upper,
            "transform": p.transform,
        }
        if p.kind == "factor":
            row["levels"] = list(p.levels)
            row["selected_levels"] = list(p.selected_levels)
        out.append(row)
    return out


def _space_from_json(model_id: str, rows: list[dict]) -> SearchSpace:
    base = builtin_space(model_id)
    by_name = {p.name: p for p in base.params}
    bounds = {}
    subsets = {}
    problems = []
    seen = set()
    for row in rows:
        name = row.get("name")
        if name not in by_name:
            problems.append(f"space: unknown hyperparameter {name!r}")
            continue
        seen.add(name)
        p = by_name[name]
        if row.get("kind", p.kind) != p.kind:
            problems.append(f"space: {name}: kind is registry-fixed ({p.kind})")
        if row.get("transform", p.transform) != p.transform:
            problems.append(f"space: {name}: transform is registry-fixed ({p.transform})")
        if row.get("default", p.default) != p.default:
            problems.append(f"space: {name}: default is registry-fixed ({p.default!r})")
        if p.kind == "factor":
            selected = row.get("selected_levels", list(p.levels))
            subsets[name] = selected
        else:
            bounds[name] = (row.get("lower", p.lower), row.get("upper", p.upper))
    missing = set(by_name) - seen
    if missing:
        problems.append(f"space: missing hyperparameters {sorted(missing)}")
    if problems:
        raise ValidationError(problems)
    try:
        return customize_space(base, bounds=bounds, level_subsets=subsets)
    except SpaceError as exc:
        raise ValidationError([f"space: {exc}"]) from exc


def spec_to_dict(spec: ExperimentSpec) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "experiment_spec",
        "prefix": spec.prefix,
        "data": {
            "source": spec.data.source,
            "test_size": spec.data.test_size,
            "n_total": spec.data.n_total,
            "scaler": spec.data.scaler,
            "target_column": spec.data.target_column,
            "sea": spec.data.sea,
        },
        "model_id": spec.model_id,
        "space": _space_to_json(spec.space),
        "eval": {
            "horizon": spec.eval.horizon,
            "oml_grace_period": spec.eval.oml_grace_period,
            "metric": spec.eval.metric,
        },
        "weights": {"y": spec.weights.y, "time": spec.weights.time, "mem": spec.weights.mem},
        "control": {
            "max_time_minutes": spec.control.max_time_minutes,
            "fun_evals": spec.control.fun_evals,
            "init_size": spec.control.init_size,
            "noise": spec.control.noise,
            "seed": spec.control.seed,
        },
    }


def spec_from_dict(payload: dict) -> ExperimentSpec:
    if not isinstance(payload, dict):
        raise ValidationError(["experiment spec must be a JSON object"])
    kind = payload.get("kind")
    if kind != "experiment_spec":
        raise WrongFileKindError(f"expected an experiment_spec document, got {kind!r}")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(
            [f"format_version {version!r} unsupported (expected {FORMAT_VERSION})"]
        )
    problems = []
    prefix = payload.get("prefix") or ""
    data_raw = payload.get("data") or {}
    eval_raw = payload.get("eval") or {}
    weights_raw = payload.get("weights") or {}
    control_raw = payload.get("control") or {}
    model_id = payload.get("model_id") or ""

    if not data_raw.get("source"):
        problems.append("data.source is required")
    if model_id not in MODEL_IDS:
        problems.append(f"unknown model_id {model_id!r}")
    if problems:
        raise ValidationError(problems)

    space = _space_from_json(model_id, payload.get("space") or _space_to_json(builtin_space(model_id)))
    data = DataOptions(
        source=str(data_raw["source"]),
        test_size=float(data_raw.get("test_size", 0.3)),
        n_total=None if data_raw.get("n_total") is None else int(data_raw["n_total"]),
        scaler=str(data_raw.get("scaler", "none")),
        target_column=data_raw.get("target_column"),
        sea=data_raw.get("sea"),
    )
    eval_cfg = HorizonEvalConfig(
        horizon=int(eval_raw.get("horizon", 100)),
        oml_grace_period=(
            None
            if eval_raw.get("oml_grace_period") is None
            else int(eval_raw["oml_grace_period"])
        ),
        metric=str(eval_raw.get("metric", "accuracy_score")),
    )
    weights = WeightVector(
        y=float(weights_raw.get("y", 1.0)),
        time=float(weights_raw.get("time", 0.0)),
        mem=float(weights_raw.get("mem", 0.0)),
    )
    control = TunerControl(
        max_time_minutes=float(control_raw.get("max_time_minutes", 10.0)),
        fun_evals=int(control_raw.get("fun_evals", 15)),
        init_size=int(control_raw.get("init_size", 8)),
        noise=bool(control_raw.get("noise", False)),
        seed=int(control_raw.get("seed", 1)),
        prefix=str(prefix),
    )
    spec = ExperimentSpec(
        prefix=str(prefix),
        data=data,
        model_id=model_id,
        space=space,
        eval=eval_cfg,
        weights=weights,
        control=control,
    )
    spec.validate()
    return spec


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def spec_sha256(spec: ExperimentSpec) -> str:
    return hashlib.sha256(canonical_json(spec_to_dict(spec)).encode("utf-8")).hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def save_spec(spec: ExperimentSpec, directory: str | Path) -> Path:
    spec.validate()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{spec.prefix}.spec.json"
    _atomic_write(path, canonical_json(spec_to_dict(spec)))
    return path


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError([f"{path.name}: not valid JSON ({exc})"]) from exc
    return spec_from_dict(payload)


# ---------------------------------------------------------------------------
# Result files


def _trial_to_json(t: TrialRecord) -> dict:
    row = {
        "index": t.index,
        "phase": t.phase,
        "vector": [float(v) for v in t.vector],
        "config": t.config,
        "ok": t.ok,
        "objective": t.objective,
        "error": t.error,
        "wall_clock": t.wall_clock,
    }
    if t.eval is not None:
        e = t.eval
        row["eval"] = {
            "metric": e.metric,
            "direction": e.direction.value,
            "metric_mean": e.metric_mean,
            "total_time_s": e.total_time_s,
            "final_memory_mb": e.final_memory_mb,
            "peak_memory_mb": e.peak_memory_mb,
            "weights": {"y": e.weights.y, "time": e.weights.time, "mem": e.weights.mem},
            "windows": [
                {
                    "index": w.index,
                    "metric_value": w.metric_value,
                    "elapsed_s": w.elapsed_s,
                    "memory_mb": w.memory_mb,
                }
                for w in e.windows
            ],
            "confusion": e.confusion.as_dict(),
            "scores": [float(s) for s in e.scores],
        }
    return row


def results_to_dict(spec: ExperimentSpec, state: TunerState, status: dict) -> dict:
    best = state.best_trial
    truths = None
    for t in state.trials:
        if t.eval is not None:
            truths = [int(v) for v in t.eval.truths]
            break
    return {
        "format_version": FORMAT_VERSION,
        "kind": "experiment_results",
        "prefix": spec.prefix,
        "spec_sha256": spec_sha256(spec),
        "spec": spec_to_dict(spec),
        "status": status,
        "test_labels": truths,
        "trials": [_trial_to_json(t) for t in state.trials],
        "surrogate": None if state.surrogate is None else state.surrogate.params_dict(),
        "best": None
        if best is None
        else {
            "index": best.index,
            "vector": [float(v) for v in best.vector],
            "config": best.config,
            "objective": best.objective,
        },
    }


def write_results(directory: Path, spec: ExperimentSpec, state: TunerState, status: dict) -> Path:
    path = Path(directory) / f"{spec.prefix}.results.json"
    _atomic_write(path, canonical_json(results_to_dict(spec, state, status)))
    return path


def load_results(path: str | Path) -> dict:
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    kind = payload.get("kind")
    if kind != "experiment_results":
        raise WrongFileKindError(f"expected an experiment_results document, got {kind!r}")
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValidationError([f"format_version {payload.get('format_version')!r} unsupported"])
    return payload


def state_from_results(payload: dict) -> TunerState:
    """Rebuild an analyzable tuner state from a results document."""
    from . import kriging
    from .evaluation import EvalResult, WindowRecord
    from .metrics import ConfusionCounts, MetricDirection

    spec = spec_from_dict(payload["spec"])
    truths = payload.get("test_labels") or []
    state = TunerState(space=spec.space, control=spec.control)
    for row in payload["trials"]:
        eval_result = None
        if row.get("eval") is not None:
            e = row["eval"]
            scores = np.asarray(e.get("scores") or [], dtype=float)
            eval_result = EvalResult(
                windows=[
                    WindowRecord(
                        index=w["index"],
                        metric_value=w["metric_value"],
                        elapsed_s=w["elapsed_s"],
                        memory_mb=w["memory_mb"],
                    )
                    for w in e["windows"]
                ],
                metric=e["metric"],
                direction=MetricDirection(e["direction"]),
                metric_mean=e["metric_mean"],
                total_time_s=e["total_time_s"],
                final_memory_mb=e["final_memory_mb"],
                peak_memory_mb=e["peak_memory_mb"],
                objective=row["objective"],
                weights=WeightVector(**e["weights"]),
                confusion=ConfusionCounts(**e["confusion"]),
                truths=np.asarray(truths[: len(scores)], dtype=np.int64),
                scores=scores,
            )
        state.trials.append(
            TrialRecord(
                index=row["index"],
                phase=row["phase"],
                vector=np.asarray(row["vector"], dtype=float),
                config=row["config"],
                ok=row["ok"],
                objective=row["objective"],
                eval=eval_result,
                error=row.get("error"),
                wall_clock=row.get("wall_clock", ""),
            )
        )
        if row["ok"] and (
            state.best_index is None
            or row["objective"] < state.trials[state.best_index].objective
        ):
            state.best_index = len(state.trials) - 1
    if payload.get("surrogate") is not None:
        state.surrogate = kriging.rebuild_kriging(payload["surrogate"])
    state.stopped = payload["status"]["state"] == STATE_STOPPED
    return state


# ---------------------------------------------------------------------------
# Dataset assembly


def build_dataset(data: DataOptions, registry: DatasetRegistry) -> Dataset:
    return registry.load(data.source, sea_options=data.sea)


def build_splits(data: DataOptions, registry: DatasetRegistry) -> tuple[Dataset, Dataset]:
    ds = build_dataset(data, registry)
    return split_train_test(ds, SplitSpec(test_size=data.test_size, n_total=data.n_total))


# ---------------------------------------------------------------------------
# Registry of runs


@dataclass
class ExperimentStatus:
    id: str
    state: str
    trials_done: int = 0
    best_objective: float | None = None
    started_at: str | None = None
    finished_at: str | None = None
    error: str | None = None

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "state": self.state,
            "trials_done": self.trials_done,
            "best_objective": self.best_objective,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "error": self.error,
        }


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class _RunHandle:
    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.stop_event = threading.Event()
        self.lock = threading.Lock()
        self.status = ExperimentStatus(id=spec.prefix, state=STATE_RUNNING, started_at=_now_iso())
        self.events: list[ProgressEvent] = []
        self.state: TunerState | None = None
        self.thread: threading.Thread | None = None


class ExperimentRegistry:
    """Concurrent-safe registry of saved, running, and finished experiments."""

    def __init__(self, directory: str | Path | None = None, datasets: DatasetRegistry | None = None):
        if directory is None:
            directory = os.environ.get(DEFAULT_DIR_ENV, DEFAULT_DIR)
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.datasets = datasets or DatasetRegistry()
        self._runs: dict[str, _RunHandle] = {}
        self._lock = threading.Lock()

    # -- run lifecycle -----------------------------------------------------

    def start(self, spec: ExperimentSpec, overwrite: bool = False, block: bool = False) -> str:
        spec.validate()
        with self._lock:
            handle = self._runs.get(spec.prefix)
            if handle is not None and handle.status.state == STATE_RUNNING:
                raise DuplicatePrefixError(f"experiment {spec.prefix!r} is already running")
            if not overwrite and handle is None:
                if (self.directory / f"{spec.prefix}.results.json").exists():
                    raise DuplicatePrefixError(
                        f"experiment {spec.prefix!r} already has results; "
                        "use a new prefix or pass overwrite"
                    )
            elif not overwrite and handle is not None:
                raise DuplicatePrefixError(
                    f"experiment {spec.prefix!r} already ran; use a new prefix or pass overwrite"
                )
            handle = _RunHandle(spec)
            self._runs[spec.prefix] = handle
        save_spec(spec, self.directory)
        if block:
            self._execute(handle)
        else:
            thread = threading.Thread(target=self._execute, args=(handle,), daemon=True)
            handle.thread = thread
            thread.start()
        return spec.prefix

    def _execute(self, handle: _RunHandle) -> None:
        spec = handle.spec
        events = EventLog(
            path=self.directory / f"{spec.prefix}.events.ndjson",
            sink=lambda ev: handle.events.append(ev),
        )

        def on_trial(record: TrialRecord) -> None:
            with handle.lock:
                handle.status.trials_done = record.index
                if record.ok and (
                    handle.status.best_objective is None
                    or record.objective < handle.status.best_objective
                ):
                    handle.status.best_objective = record.objective

        try:
            train, test = build_splits(spec.data, self.datasets)

            def on_state(state):
                handle.state = state

            state = run_tuning_loop(
                space=spec.space,
                control=spec.control,
                train=train,
                test=test,
                eval_cfg=spec.eval,
                weights=spec.weights,
                scaler_kind=spec.data.scaler,
                events=events,
                should_stop=handle.stop_event.is_set,
                on_trial=on_trial,
                on_state=on_state,
            )
            final = STATE_STOPPED if state.stopped else STATE_FINISHED
        except Exception as exc:  # noqa: BLE001 - surfaced via status
            with handle.lock:
                handle.status.state = STATE_FAILED
                handle.status.error = f"{type(exc).__name__}: {exc}"
                handle.status.finished_at = _now_iso()
            return
        with handle.lock:
            handle.status.state = final
            handle.status.finished_at = _now_iso()
            status_dict = handle.status.as_dict()
        write_results(self.directory, spec, state, status_dict)

    def stop(self, experiment_id: str) -> ExperimentStatus:
        handle = self._handle(experiment_id)
        if handle is None:
            raise UnknownExperimentError(experiment_id)
        handle.stop_event.set()
        return self.status(experiment_id)

    def wait(self, experiment_id: str, timeout: float | None = None) -> None:
        handle = self._handle(experiment_id)
        if handle is not None and handle.thread is not None:
            handle.thread.join(timeout)

    def _handle(self, experiment_id: str) -> _RunHandle | None:
        with self._lock:
            return self._runs.get(experiment_id)

    # -- status and listing --------------------------------------------------

    def status(self, experiment_id: str) -> ExperimentStatus:
        handle = self._handle(experiment_id)
        if handle is not None:
            with handle.lock:
                return ExperimentStatus(**handle.status.as_dict())
        results = self.directory / f"{experiment_id}.results.json"
        if results.exists():
            payload = load_results(results)
            return ExperimentStatus(**payload["status"])
        spec_path = self.directory / f"{experiment_id}.spec.json"
        if spec_path.exists():
            return ExperimentStatus(id=experiment_id, state=STATE_SAVED)
        raise UnknownExperimentError(experiment_id)

    def list(self) -> list[ExperimentStatus]:
        ids = set()
        for path in self.directory.glob("*.spec.json"):
            ids.add(path.name[: -len(".spec.json")])
        for path in self.directory.glob("*.results.json"):
            ids.add(path.name[: -len(".results.json")])
        with self._lock:
            ids.update(self._runs)
        return [self.status(i) for i in sorted(ids)]

    def events(self, experiment_id: str, from_index: int = 0) -> list[dict]:
        handle = self._handle(experiment_id)
        if handle is not None:
            rows = [ev.as_dict() for ev in handle.events]
            return rows[from_index:]
        path = self.directory / f"{experiment_id}.events.ndjson"
        if not path.exists():
            if not (self.directory / f"{experiment_id}.spec.json").exists():
                raise UnknownExperimentError(experiment_id)
            return []
        rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]
        return rows[from_index:]

    def spec_of(self, experiment_id: str) -> ExperimentSpec:
        handle = self._handle(experiment_id)
        if handle is not None:
            return handle.spec
        spec_path = self.directory / f"{experiment_id}.spec.json"
        if spec_path.exists():
            return load_spec(spec_path)
        raise UnknownExperimentError(experiment_id)

    def state_of(self, experiment_id: str) -> TunerState:
        """Analyzable tuner state of a finished/stopped run."""
        handle = self._handle(experiment_id)
        if handle is not None and handle.state is not None:
            return handle.state
        results = self.directory / f"{experiment_id}.results.json"
        if results.exists():
            return state_from_results(load_results(results))
        if handle is not None:
            raise AnalysisNotReadyError(experiment_id)
        raise UnknownExperimentError(experiment_id)

    def is_finished(self, experiment_id: str) -> bool:
        return self.status(experiment_id).state in (STATE_FINISHED, STATE_STOPPED, STATE_FAILED)


class AnalysisNotReadyError(RuntimeError):
    pass
