"""Surrogate-model-based tuning loop.

The loop always evaluates the default configuration first, then the rest
of the Latin-hypercube initial design (this block runs to completion no
matter what the time budget says), and only then alternates fit ->
propose -> evaluate until the evaluation budget or the time budget is
exhausted.  Failed evaluations are recorded but never fed to the
surrogate; the run aborts only if the whole initial design fails.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import kriging
from .dataspace import Dataset, OnlineScaler
from .evaluation import EvalResult, HorizonEvalConfig, WeightVector, eval_oml_horizon
from .learners import ScaledClassifier, build_model
from .searchspace import SearchSpace, decode

PHASE_INITIAL = "initial_design"
PHASE_SURROGATE = "surrogate"

STAR_THRESHOLDS = ((95.0, "***"), (50.0, "**"), (1.0, "*"), (0.1, "."))

_PREFIX_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class TunerError(RuntimeError):
    pass


@dataclass(frozen=True)
class TunerControl:
    max_time_minutes: float = 10.0
    fun_evals: int = 15
    init_size: int = 8
    noise: bool = False
    seed: int = 1
    prefix: str = "experiment"

    def validate(self) -> list[str]:
        problems = []
        if not (self.max_time_minutes > 0):
            problems.append("max_time_minutes must be positive")
        if self.fun_evals < 1:
            problems.append("fun_evals must be at least 1")
        if self.init_size < 1:
            problems.append("init_size must be at least 1")
        if not self.prefix or not _PREFIX_RE.match(self.prefix):
            problems.append("prefix must be non-empty and filesystem-safe")
        return problems

    def warnings(self) -> list[str]:
        if self.init_size > self.fun_evals:
            return [
                f"init_size={self.init_size} exceeds fun_evals={self.fun_evals}; "
                "the initial design is evaluated in full regardless"
            ]
        return []


@dataclass
class TrialRecord:
    index: int  # 1-based
    phase: str
    vector: np.ndarray  # internal coordinates
    config: dict  # effective values
    ok: bool
    objective: float | None
    eval: EvalResult | None
    error: str | None
    wall_clock: str  # ISO timestamp


@dataclass
class TunerState:
    space: SearchSpace
    control: TunerControl
    trials: list[TrialRecord] = field(default_factory=list)
    surrogate: kriging.KrigingModel | None = None
    best_index: int | None = None  # index into trials
    stopped: bool = False

    @property
    def best_trial(self) -> TrialRecord | None:
        return None if self.best_index is None else self.trials[self.best_index]

    def successful_trials(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.ok]


@dataclass(frozen=True)
class ImportanceReport:
    names: tuple[str, ...]
    importance: tuple[float, ...]  # in [0, 100], max is 100
    stars: tuple[str, ...]


def stars_for(importance: float) -> str:
    for threshold, glyph in STAR_THRESHOLDS:
        if importance >= threshold:
            return glyph
    return ""


def importance(model: kriging.KrigingModel, names=None) -> ImportanceReport:
    """Per-dimension activity from the fitted length-scales, scaled to 100."""
    activity = 10.0**model.theta
    top = float(np.max(activity))
    # ratio first: a/top is exactly 1.0 at the maximum, so max importance
    # is exactly 100
    values = tuple(float(100.0 * (a / top)) for a in activity)
    if names is None:
        names = tuple(f"x{i}" for i in range(model.d))
    return ImportanceReport(
        names=tuple(names),
        importance=values,
        stars=tuple(stars_for(v) for v in values),
    )


def propose_next(
    model: kriging.KrigingModel,
    space: SearchSpace,
    f_best: float,
    seed: int = 0,
    n_candidates: int = 1000,
) -> np.ndarray:
    """Next configuration by expected improvement, in internal coordinates.

    Maximizes EI over an LHS candidate cloud refined coordinate-wise from
    the best few candidates; falls back to the maximum-variance candidate
    and then to a random point whenever the winner would duplicate an
    existing design point (within 1e-6 in the normalized box).
    """
    rng = np.random.default_rng(seed)
    d = len(space)
    cands = kriging.latin_hypercube(n_candidates, d, rng)
    ei = kriging.expected_improvement_batch(model, cands, f_best)

    top = np.argsort(-ei)[:5]
    best_point = cands[top[0]].copy()
    best_ei = float(ei[top[0]])
    for idx in top:
        point = cands[idx].copy()
        value = float(ei[idx])
        for _ in range(2):  # two refinement sweeps
            for j in range(d):
                grid = np.clip(point[j] + np.linspace(-0.1, 0.1, 11), 0.0, 1.0)
                trials = np.tile(point, (grid.size, 1))
                trials[:, j] = grid
                trial_ei = kriging.expected_improvement_batch(model, trials, f_best)
                k = int(np.argmax(trial_ei))
                if trial_ei[k] > value:
                    value = float(trial_ei[k])
                    point[j] = grid[k]
        if value > best_ei:
            best_ei = value
            best_point = point

    def is_duplicate(point) -> bool:
        return bool(np.any(np.max(np.abs(model.x - point), axis=1) < 1e-6))

    if is_duplicate(best_point):
        _, var = model.predict_batch(cands)
        order = np.argsort(-var)
        best_point = None
        for idx in order:
            if not is_duplicate(cands[idx]):
                best_point = cands[idx]
                break
        if best_point is None:
            for _ in range(100):
                draw = rng.uniform(size=d)
                if not is_duplicate(draw):
                    best_point = draw
                    break
            else:
                best_point = rng.uniform(size=d)
    return space.denormalize(best_point)


@dataclass
class ProgressEvent:
    trial_index: int
    phase: str
    objective: float | None
    best_so_far: float | None
    elapsed_s: float

    def as_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "phase": self.phase,
            "objective": self.objective,
            "best_so_far": self.best_so_far,
            "elapsed_s": self.elapsed_s,
        }


class EventLog:
    """Per-trial progress events: in-memory list plus an ndjson file."""

    def __init__(self, path: str | Path | None = None, sink: Callable | None = None):
        self.path = Path(path) if path else None
        self.sink = sink
        self.events: list[ProgressEvent] = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    def emit(self, event: ProgressEvent) -> None:
        self.events.append(event)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.as_dict(), sort_keys=True) + "\n")
        if self.sink is not None:
            self.sink(event)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_tuning_loop(
    space: SearchSpace,
    control: TunerControl,
    train: Dataset,
    test: Dataset,
    eval_cfg: HorizonEvalConfig,
    weights: WeightVector,
    scaler_kind: str = "none",
    events: EventLog | None = None,
    should_stop: Callable[[], bool] | None = None,
    on_trial: Callable[[TrialRecord], None] | None = None,
    on_state: Callable[[TunerState], None] | None = None,
) -> TunerState:
    problems = control.validate()
    if problems:
        raise TunerError("; ".join(problems))
    eval_cfg.validate(train_len=len(train))
    weights.validate()
    if events is None:
        events = EventLog()

    seed_seq = np.random.SeedSequence(control.seed)
    design_seed, *trial_seeds = seed_seq.spawn(1 + 2 * control.fun_evals)

    state = TunerState(space=space, control=control)
    if on_state is not None:
        # expose the live state immediately; trials append at boundaries
        on_state(state)
    t_start = time.perf_counter()
    deadline = control.max_time_minutes * 60.0

    def evaluate_vector(index: int, phase: str, vector: np.ndarray) -> TrialRecord:
        vector = np.asarray(vector, dtype=float)
        try:
            config = decode(space, vector)
            model = ScaledClassifier(OnlineScaler(scaler_kind), build_model(space.model_id, config))
            result = eval_oml_horizon(model, train, test, eval_cfg, weights)
            record = TrialRecord(
                index=index,
                phase=phase,
                vector=vector,
                config=config,
                ok=True,
                objective=result.objective,
                eval=result,
                error=None,
                wall_clock=_now_iso(),
            )
        except Exception as exc:  # noqa: BLE001 - failed trials are data
            record = TrialRecord(
                index=index,
                phase=phase,
                vector=vector,
                config=locals().get("config", {}),
                ok=False,
                objective=None,
                eval=None,
                error=f"{type(exc).__name__}: {exc}",
                wall_clock=_now_iso(),
            )
        state.trials.append(record)
        if record.ok and (
            state.best_index is None
            or record.objective < state.trials[state.best_index].objective
        ):
            state.best_index = len(state.trials) - 1
        best = state.best_trial
        events.emit(
            ProgressEvent(
                trial_index=index,
                phase=phase,
                objective=record.objective,
                best_so_far=None if best is None else best.objective,
                elapsed_s=time.perf_counter() - t_start,
            )
        )
        if on_trial is not None:
            on_trial(record)
        return record

    # initial design: the default configuration plus init_size - 1 LHS points;
    # always evaluated in full before any stopping criterion applies, even
    # when that overruns the time budget
    n_init = control.init_size
    init_vectors = [space.default_vector()]
    if n_init > 1:
        unit = kriging.latin_hypercube(n_init - 1, len(space), np.random.default_rng(design_seed))
        init_vectors.extend(space.denormalize(u) for u in unit)
    for i, vec in enumerate(init_vectors, start=1):
        evaluate_vector(i, PHASE_INITIAL, vec)
        if should_stop is not None and should_stop():
            state.stopped = True
            break

    if not state.stopped and not any(t.ok for t in state.trials):
        raise TunerError("every initial-design trial failed")

    # surrogate phase
    trial_index = len(state.trials)
    while (
        not state.stopped
        and trial_index < control.fun_evals
        and (time.perf_counter() - t_start) <= deadline
        and (should_stop is None or not should_stop())
    ):
        trial_index += 1
        fit_seed = trial_seeds[2 * (trial_index - 1) % len(trial_seeds)]
        prop_seed = trial_seeds[(2 * (trial_index - 1) + 1) % len(trial_seeds)]
        model = _fit_surrogate(state, fit_seed)
        if model is None:
            # not enough distinct data; fall back to a random draw
            rng = np.random.default_rng(prop_seed)
            vector = space.denormalize(rng.uniform(size=len(space)))
        else:
            f_best = _incumbent_for_ei(state, model)
            vector = propose_next(model, space, f_best, seed=prop_seed)
        evaluate_vector(trial_index, PHASE_SURROGATE, vector)

    if should_stop is not None and should_stop():
        state.stopped = True

    _fit_final_surrogate(state)
    return state


def _design_matrix(state: TunerState) -> tuple[np.ndarray, np.ndarray]:
    """Normalized design and responses of successful trials, deduplicated.

    Exact duplicate rows keep their best (lowest) objective so that the
    interpolating surrogate stays well posed.
    """
    rows: dict[tuple, float] = {}
    for t in state.successful_trials():
        key = tuple(np.round(state.space.normalize(t.vector), 12))
        if key not in rows or t.objective < rows[key]:
            rows[key] = t.objective
    x = np.array(list(rows.keys()), dtype=float).reshape(len(rows), len(state.space))
    y = np.array(list(rows.values()), dtype=float)
    return x, y


def _fit_surrogate(state: TunerState, seed) -> kriging.KrigingModel | None:
    x, y = _design_matrix(state)
    if x.shape[0] < 2:
        return None
    try:
        return kriging.fit_kriging(x, y, noise=state.control.noise, seed=seed)
    except kriging.FitError:
        return None


def _fit_final_surrogate(state: TunerState) -> None:
    state.surrogate = _fit_surrogate(state, np.random.SeedSequence(state.control.seed + 1))


def _incumbent_for_ei(state: TunerState, model: kriging.KrigingModel) -> float:
    """EI incumbent: raw minimum, or minimum predicted mean under noise."""
    if state.control.noise:
        mean, _ = model.predict_batch(model.x)
        return float(np.min(mean))
    return float(np.min(model.y))
