"""HTTP JSON API over datasets, experiment lifecycle, and analysis.

A thin layer over the experiment registry: request handlers validate,
delegate, and serialize.  Tuning runs execute on registry-owned worker
threads, never on a request handler.  Every non-2xx response body
carries a machine ``code`` and a human ``message``.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse

from . import analysis
from .dataspace import ConfigurationError, SplitSpec, display_sample, split_train_test, summarize
from .experiments import (
    AnalysisNotReadyError,
    DuplicatePrefixError,
    ExperimentRegistry,
    UnknownExperimentError,
    ValidationError,
    WrongFileKindError,
    spec_from_dict,
    spec_to_dict,
)

ANALYSIS_KINDS = ("progress", "compare", "importance", "contour", "parallel", "confusion")
# available while a run is still in flight
LIVE_KINDS = ("progress", "parallel")

DISPLAY_CAP = 1000


def _error(status: int, code: str, message: str, details=None) -> JSONResponse:
    body = {"code": code, "message": message}
    if details is not None:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


def _summary_payload(summary) -> dict:
    return {col: stats.as_dict() for col, stats in zip(summary.columns, summary.stats)}


def _sample_payload(ds) -> dict:
    return {
        "columns": list(ds.schema.column_names),
        "rows": [list(map(float, row)) for row in ds.features],
        "labels": [int(v) for v in ds.labels],
    }


def create_app(registry: ExperimentRegistry, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="omltune", version="0.1.0")
    ui_root = Path(ui_dir) if ui_dir else None

    @app.exception_handler(RequestValidationError)
    async def on_request_validation(request: Request, exc: RequestValidationError):
        return _error(422, "validation_error", "invalid request", details=exc.errors())

    @app.exception_handler(ValidationError)
    async def on_spec_validation(request: Request, exc: ValidationError):
        return _error(422, "validation_error", "invalid experiment spec", details=exc.problems)

    @app.exception_handler(DuplicatePrefixError)
    async def on_duplicate(request: Request, exc: DuplicatePrefixError):
        return _error(409, "duplicate_prefix", str(exc))

    @app.exception_handler(UnknownExperimentError)
    async def on_unknown(request: Request, exc: UnknownExperimentError):
        return _error(404, "experiment_not_found", f"no experiment {exc.args[0]!r}")

    @app.exception_handler(AnalysisNotReadyError)
    async def on_not_ready(request: Request, exc: AnalysisNotReadyError):
        return _error(409, "analysis_not_ready", "analysis requires a finished run")

    # -- models -----------------------------------------------------------

    @app.get("/api/models")
    def list_models():
        from .metrics import METRIC_IDS, direction_of
        from .searchspace import MODEL_IDS, builtin_space
        from .experiments import _space_to_json

        return {
            "models": [
                {"id": model_id, "space": _space_to_json(builtin_space(model_id))}
                for model_id in MODEL_IDS
            ],
            "metrics": [
                {"id": m, "direction": direction_of(m).value} for m in METRIC_IDS
            ],
            "scalers": ["standard", "minmax", "none"],
        }

    # -- datasets ---------------------------------------------------------

    @app.get("/api/datasets")
    def list_datasets():
        return [
            {"id": i.id, "n_rows": i.n_rows, "n_features": i.n_features, "source": i.source}
            for i in registry.datasets.info()
        ]

    @app.get("/api/datasets/{dataset_id}/summary")
    def dataset_summary(
        dataset_id: str,
        test_size: float = Query(default=0.3),
        n_total: int | None = Query(default=None),
        seed: int = Query(default=0),
    ):
        try:
            ds = registry.datasets.load(dataset_id)
        except KeyError:
            return _error(404, "dataset_not_found", f"no dataset {dataset_id!r}")
        try:
            train, test = split_train_test(ds, SplitSpec(test_size=test_size, n_total=n_total))
        except ConfigurationError as exc:
            return _error(422, "invalid_split", str(exc))
        return {
            "id": dataset_id,
            "n_rows": len(ds),
            "train": _summary_payload(summarize(train)),
            "test": _summary_payload(summarize(test)),
            "train_sample": _sample_payload(display_sample(train, DISPLAY_CAP, seed=seed)),
            "test_sample": _sample_payload(display_sample(test, DISPLAY_CAP, seed=seed)),
        }

    # -- experiments ------------------------------------------------------

    @app.post("/api/experiments", status_code=201)
    def create_experiment(payload: dict, overwrite: bool = Query(default=False)):
        try:
            spec = spec_from_dict(payload)
        except WrongFileKindError as exc:
            return _error(422, "wrong_kind", str(exc))
        experiment_id = registry.start(spec, overwrite=overwrite)
        status = registry.status(experiment_id)
        return {"id": experiment_id, "state": status.state}

    @app.get("/api/experiments")
    def list_experiments():
        return [s.as_dict() for s in registry.list()]

    @app.get("/api/experiments/{experiment_id}")
    def experiment_status(experiment_id: str):
        status = registry.status(experiment_id)
        payload = status.as_dict()
        payload["spec"] = spec_to_dict(registry.spec_of(experiment_id))
        return payload

    @app.post("/api/experiments/{experiment_id}/stop")
    def stop_experiment(experiment_id: str):
        return registry.stop(experiment_id).as_dict()

    @app.get("/api/experiments/{experiment_id}/events")
    def experiment_events(experiment_id: str, from_index: int = Query(default=0, alias="from")):
        events = registry.events(experiment_id, from_index=from_index)
        return {"from": from_index, "next": from_index + len(events), "events": events}

    # -- analysis ---------------------------------------------------------

    @app.get("/api/experiments/{experiment_id}/analysis/{kind}")
    def experiment_analysis(
        experiment_id: str,
        kind: str,
        i: int = Query(default=0),
        j: int = Query(default=1),
        resolution: int = Query(default=50, ge=2, le=200),
    ):
        if kind not in ANALYSIS_KINDS:
            return _error(404, "unknown_analysis", f"no analysis kind {kind!r}")
        status = registry.status(experiment_id)  # 404s for unknown ids
        if kind not in LIVE_KINDS and not registry.is_finished(experiment_id):
            return _error(409, "analysis_not_ready", f"{kind} requires a finished run")
        if kind == "contour" and i == j:
            return _error(422, "invalid_dims", "contour dimensions must differ")
        state = registry.state_of(experiment_id)
        try:
            if kind == "progress":
                series = analysis.progress_series(state)
                return {
                    "series": [
                        {
                            "index": p.index,
                            "objective": p.objective,
                            "best_so_far": p.best_so_far,
                            "phase": p.phase,
                        }
                        for p in series.points
                    ],
                    "init_size": state.control.init_size,
                    "state": status.state,
                }
            if kind == "compare":
                rows = analysis.compare_default_tuned(state)
                return {
                    "header": analysis.COMPARE_HEADER,
                    "rows": [
                        {
                            "name": r.name,
                            "type": r.type,
                            "default": r.default,
                            "low": r.low,
                            "up": r.up,
                            "tuned": r.tuned,
                            "transf": r.transf,
                            "importance": r.importance,
                            "stars": r.stars,
                        }
                        for r in rows
                    ],
                    "text": analysis.render_compare_table(rows),
                }
            if kind == "importance":
                report = analysis.state_importance(state)
                return {
                    "dims": [
                        {"name": n, "importance": v, "stars": s}
                        for n, v, s in zip(report.names, report.importance, report.stars)
                    ]
                }
            if kind == "contour":
                grid = analysis.surrogate_contour(state, i, j, resolution=resolution)
                return {
                    "i": grid.dim_i,
                    "j": grid.dim_j,
                    "name_i": grid.name_i,
                    "name_j": grid.name_j,
                    "resolution": grid.resolution,
                    "xs": list(grid.xs),
                    "ys": list(grid.ys),
                    "mean": [list(row) for row in grid.mean],
                }
            if kind == "parallel":
                return analysis.parallel_coordinates_data(state)
            counts = analysis.confusion_for_best(state)
            return counts.as_dict()
        except analysis.AnalysisError as exc:
            return _error(422, "analysis_error", str(exc))

    # -- UI / root --------------------------------------------------------

    @app.get("/", include_in_schema=False)
    def root():
        if ui_root is not None and (ui_root / "index.html").exists():
            return FileResponse(ui_root / "index.html")
        return PlainTextResponse("omltune service is running; API under /api/")

    @app.get("/ui/{asset_path:path}", include_in_schema=False)
    def ui_asset(asset_path: str):
        if ui_root is None:
            return _error(404, "no_ui", "web UI assets are not built")
        target = (ui_root / asset_path).resolve()
        if not str(target).startswith(str(ui_root.resolve())) or not target.is_file():
            return _error(404, "no_such_asset", asset_path)
        return FileResponse(target)

    return app


def default_ui_dir() -> Path | None:
    """Built frontend assets, when the sibling frontend/dist exists."""
    candidates = [
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
        Path.cwd() / "frontend" / "dist",
    ]
    for c in candidates:
        if (c / "index.html").exists():
            return c
    return None
