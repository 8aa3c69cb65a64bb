"""Post-run analysis artifacts over a finished tuning state.

Everything here is a pure function of the tuner state and emits
structured data (series, tables, grids); rendering belongs to the CLI
and the web UI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import ConfusionCounts, confusion, threshold_scores
from .tuner import ImportanceReport, TunerState, importance

COMPARE_HEADER = "|name    |type   |default |low | up |tuned |transf |importance|stars|"

_TRANSF_LABELS = {"none": "None", "power_2_int": "pow_2", "power_10": "pow_10"}


class AnalysisError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProgressPoint:
    index: int
    objective: float | None
    best_so_far: float | None
    phase: str


@dataclass(frozen=True)
class ProgressSeries:
    points: tuple[ProgressPoint, ...]


@dataclass(frozen=True)
class CompareRow:
    name: str
    type: str
    default: float
    low: float
    up: float
    tuned: float
    transf: str
    importance: float | None
    stars: str


@dataclass(frozen=True)
class ContourGrid:
    dim_i: int
    dim_j: int
    name_i: str
    name_j: str
    resolution: int
    xs: tuple[float, ...]  # normalized grid along dim i
    ys: tuple[float, ...]  # normalized grid along dim j
    mean: tuple[tuple[float, ...], ...]  # mean[row][col], row over ys


def progress_series(state: TunerState) -> ProgressSeries:
    """Per-trial objective and running best, with design-phase labels."""
    if not state.trials:
        raise AnalysisError("no trials recorded")
    points = []
    best = None
    for t in state.trials:
        if t.ok and (best is None or t.objective < best):
            best = t.objective
        points.append(
            ProgressPoint(index=t.index, objective=t.objective, best_so_far=best, phase=t.phase)
        )
    return ProgressSeries(points=tuple(points))


def state_importance(state: TunerState) -> ImportanceReport:
    if state.surrogate is None:
        raise AnalysisError("no fitted surrogate available")
    return importance(state.surrogate, names=state.space.names())


def compare_default_tuned(state: TunerState) -> list[CompareRow]:
    """Default-versus-tuned table, one row per hyperparameter.

    Defaults, bounds, and tuned values are reported in internal
    (pre-transform) coordinates, matching the tuning scale.
    """
    best = state.best_trial
    if best is None:
        raise AnalysisError("no successful trial to compare against")
    report = None
    if state.surrogate is not None:
        report = state_importance(state)
    rows = []
    for k, p in enumerate(state.space.params):
        rows.append(
            CompareRow(
                name=p.name,
                type=p.kind,
                default=p.internal_default(),
                low=p.lower,
                up=p.upper,
                tuned=float(best.vector[k]),
                transf=_TRANSF_LABELS[p.transform],
                importance=None if report is None else report.importance[k],
                stars="" if report is None else report.stars[k],
            )
        )
    return rows


def render_compare_table(rows: list[CompareRow]) -> str:
    """Console rendering of the comparison table (shared by CLI and API)."""
    lines = [COMPARE_HEADER, "|--------|-------|--------|----|----|------|-------|----------|-----|"]
    for r in rows:
        importance_cell = "" if r.importance is None else f"{r.importance:10.2f}"
        lines.append(
            f"|{r.name[:8]:<8}|{r.type:<7}|{_fmt(r.default):>8}|{_fmt(r.low):<4}|{_fmt(r.up):<4}"
            f"|{_fmt(r.tuned):>6}|{r.transf:^7}|{importance_cell:>10}|{r.stars:<5}|"
        )
    return "\n".join(lines)


def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return f"{value:.1f}"
    return f"{value:.4g}"


def surrogate_contour(state: TunerState, i: int, j: int, resolution: int = 50) -> ContourGrid:
    """Surrogate mean over a 2-D slice, other dimensions pinned at the best."""
    if state.surrogate is None:
        raise AnalysisError("no fitted surrogate available")
    d = len(state.space)
    if d < 2:
        raise AnalysisError("contour slices need at least two dimensions")
    if i == j or not (0 <= i < d) or not (0 <= j < d):
        raise AnalysisError(f"invalid dimension pair ({i}, {j})")
    if resolution < 2:
        raise AnalysisError("resolution must be at least 2")
    best = state.best_trial
    if best is None:
        raise AnalysisError("no successful trial available")
    base = state.space.normalize(best.vector)
    axis = np.linspace(0.0, 1.0, resolution)
    points = np.tile(base, (resolution * resolution, 1))
    xv, yv = np.meshgrid(axis, axis)  # rows vary y (dim j), cols vary x (dim i)
    points[:, i] = xv.ravel()
    points[:, j] = yv.ravel()
    mean, _ = state.surrogate.predict_batch(points)
    grid = mean.reshape(resolution, resolution)
    return ContourGrid(
        dim_i=i,
        dim_j=j,
        name_i=state.space.names()[i],
        name_j=state.space.names()[j],
        resolution=resolution,
        xs=tuple(float(v) for v in axis),
        ys=tuple(float(v) for v in axis),
        mean=tuple(tuple(float(v) for v in row) for row in grid),
    )


def parallel_coordinates_data(state: TunerState) -> dict:
    """Per-trial normalized coordinates plus the objective, for plotting."""
    rows = []
    for t in state.successful_trials():
        rows.append(
            {
                "index": t.index,
                "coords": [float(v) for v in state.space.normalize(t.vector)],
                "objective": t.objective,
                "phase": t.phase,
            }
        )
    if not rows:
        raise AnalysisError("no successful trials")
    return {"dims": state.space.names(), "rows": rows}


def confusion_for_best(state: TunerState) -> ConfusionCounts:
    """Aggregate confusion counts of the best trial's evaluation."""
    best = state.best_trial
    if best is None or best.eval is None:
        raise AnalysisError("best trial has no stored evaluation")
    return best.eval.confusion


def recount_confusion(state: TunerState) -> ConfusionCounts:
    """Independent recount from the stored truths and scores."""
    best = state.best_trial
    return confusion(best.eval.truths, threshold_scores(best.eval.scores))
