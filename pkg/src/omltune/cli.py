"""Command-line front door.

Subcommands: ``data show`` (dataset summaries), ``save`` (write a spec
file), ``run`` (execute a spec with live progress), ``analyze``
(post-run tables and data files), ``serve`` (HTTP service + web UI).

Exit codes: 0 ok, 1 runtime failure, 2 validation failure, 130
interrupted.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import analysis
from .dataspace import (
    ConfigurationError,
    DatasetRegistry,
    SplitSpec,
    display_sample,
    format_summary,
    split_train_test,
    summarize,
)
from .evaluation import HorizonEvalConfig, WeightVector
from .experiments import (
    DataOptions,
    DuplicatePrefixError,
    ExperimentRegistry,
    ExperimentSpec,
    UnknownExperimentError,
    ValidationError,
    load_spec,
    save_spec,
    spec_to_dict,
)
from .searchspace import builtin_space
from .tuner import TunerControl

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2
EXIT_INTERRUPT = 130


def _registry(args) -> ExperimentRegistry:
    datasets = DatasetRegistry(user_data_dir=getattr(args, "user_data", None) or "userData")
    return ExperimentRegistry(directory=getattr(args, "dir", None), datasets=datasets)


def _parse_weights(text: str) -> WeightVector:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValidationError([f"weights must be three comma-separated reals, got {text!r}"])
    return WeightVector(y=float(parts[0]), time=float(parts[1]), mem=float(parts[2]))


def _parse_schedule(text: str) -> list[tuple[int, int]]:
    # "0:2000,2:2000" -> [(0, 2000), (2, 2000)]
    out = []
    for item in text.split(","):
        variant, _, length = item.partition(":")
        out.append((int(variant), int(length)))
    return out


def cmd_data_show(args) -> int:
    registry = _registry(args)
    try:
        ds = registry.datasets.load(args.dataset_id)
    except KeyError:
        print(f"unknown dataset {args.dataset_id!r}; known: {registry.datasets.ids()}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        train, test = split_train_test(
            ds, SplitSpec(test_size=args.test_size, n_total=args.n_total)
        )
    except ConfigurationError as exc:
        print(f"invalid split: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print("Train data summary:")
    print(format_summary(summarize(train).as_dict()))
    print()
    print("Test data summary:")
    print(format_summary(summarize(test).as_dict()))
    if args.plots_dir:
        _write_plot_data(Path(args.plots_dir), args.dataset_id, train, test)
        print(f"\nplot data written to {args.plots_dir}")
    return EXIT_OK


def _write_plot_data(directory: Path, dataset_id: str, train, test) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("test", test)):
        hist_path = directory / f"{dataset_id}_{name}_target_hist.csv"
        with hist_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "count"])
            writer.writerow([0, int((part.labels == 0).sum())])
            writer.writerow([1, int((part.labels == 1).sum())])
        sample = display_sample(part, 1000, seed=0)
        scatter_path = directory / f"{dataset_id}_{name}_scatter.csv"
        with scatter_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(sample.schema.column_names))
            for row, label in zip(sample.features, sample.labels):
                writer.writerow([*map(float, row), int(label)])


def cmd_save(args) -> int:
    try:
        weights = _parse_weights(args.weights)
        sea = None
        if args.source == "sea":
            sea = {
                "n": args.sea_n,
                "noise_frac": args.sea_noise,
                "seed": args.sea_seed,
                "schedule": _parse_schedule(args.sea_schedule),
            }
        if args.model_id not in ("hoeffding_tree", "logistic_regression"):
            raise ValidationError([f"unknown model_id {args.model_id!r}"])
        spec = ExperimentSpec(
            prefix=args.prefix,
            data=DataOptions(
                source=args.source,
                test_size=args.test_size,
                n_total=args.n_total,
                scaler=args.scaler,
                target_column=args.target_column,
                sea=sea,
            ),
            model_id=args.model_id,
            space=builtin_space(args.model_id),
            eval=HorizonEvalConfig(
                horizon=args.horizon,
                oml_grace_period=args.oml_grace_period,
                metric=args.metric,
            ),
            weights=weights,
            control=TunerControl(
                max_time_minutes=args.max_time,
                fun_evals=args.fun_evals,
                init_size=args.init_size,
                noise=args.noise,
                seed=args.seed,
                prefix=args.prefix,
            ),
        )
        spec.validate()
    except (ValidationError,) as exc:
        for problem in exc.problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, KeyError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps(spec_to_dict(spec), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"spec written to {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        spec = load_spec(args.spec)
    except FileNotFoundError:
        print(f"no such spec file: {args.spec}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValidationError as exc:
        for problem in exc.problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    registry = _registry(args)
    try:
        experiment_id = registry.start(spec, overwrite=args.overwrite)
    except DuplicatePrefixError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME
    except ValidationError as exc:
        for problem in exc.problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"running experiment {experiment_id!r} ({spec.control.fun_evals} evaluations)")
    seen = 0
    try:
        while True:
            for event in registry.events(experiment_id, from_index=seen):
                seen += 1
                objective = event["objective"]
                best = event["best_so_far"]
                print(
                    f"[{event['trial_index']:>3}] {event['phase']:<14} "
                    f"objective={_num(objective)} best={_num(best)} "
                    f"elapsed={event['elapsed_s']:.1f}s"
                )
            status = registry.status(experiment_id)
            if status.state != "running":
                break
            time.sleep(0.1)
    except KeyboardInterrupt:
        print("\ninterrupt: stopping at the next trial boundary ...", file=sys.stderr)
        registry.stop(experiment_id)
        registry.wait(experiment_id)
        print(f"stopped; artifacts flushed to {registry.directory}", file=sys.stderr)
        return EXIT_INTERRUPT
    registry.wait(experiment_id)
    status = registry.status(experiment_id)
    print(f"state={status.state} best_objective={_num(status.best_objective)}")
    if status.state == "failed":
        print(f"error: {status.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _num(value) -> str:
    return "n/a" if value is None else f"{value:.6f}"


def cmd_analyze(args) -> int:
    registry = _registry(args)
    try:
        state = registry.state_of(args.prefix)
    except UnknownExperimentError:
        print(f"no experiment {args.prefix!r} in {registry.directory}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.kind == "compare":
            rows = analysis.compare_default_tuned(state)
            text = analysis.render_compare_table(rows)
            print(text)
            payload = {"header": analysis.COMPARE_HEADER, "text": text}
        elif args.kind == "progress":
            series = analysis.progress_series(state)
            payload = {
                "series": [
                    {
                        "index": p.index,
                        "objective": p.objective,
                        "best_so_far": p.best_so_far,
                        "phase": p.phase,
                    }
                    for p in series.points
                ]
            }
            for p in series.points:
                print(f"[{p.index:>3}] {p.phase:<14} objective={_num(p.objective)} best={_num(p.best_so_far)}")
        elif args.kind == "importance":
            report = analysis.state_importance(state)
            payload = {
                "dims": [
                    {"name": n, "importance": v, "stars": s}
                    for n, v, s in zip(report.names, report.importance, report.stars)
                ]
            }
            for row in payload["dims"]:
                print(f"{row['name']:<16} {row['importance']:>8.2f} | {row['stars']}")
        elif args.kind == "contour":
            grid = analysis.surrogate_contour(state, args.i, args.j, resolution=args.resolution)
            payload = {
                "i": grid.dim_i,
                "j": grid.dim_j,
                "name_i": grid.name_i,
                "name_j": grid.name_j,
                "xs": list(grid.xs),
                "ys": list(grid.ys),
                "mean": [list(row) for row in grid.mean],
            }
            print(f"contour {grid.name_i} x {grid.name_j}: {grid.resolution}x{grid.resolution} grid")
        elif args.kind == "parallel":
            payload = analysis.parallel_coordinates_data(state)
            print(f"{len(payload['rows'])} trials over dims {payload['dims']}")
        elif args.kind == "confusion":
            counts = analysis.confusion_for_best(state)
            payload = counts.as_dict()
            print(f"tp={counts.tp} fp={counts.fp} tn={counts.tn} fn={counts.fn}")
        else:
            print(f"unknown analysis kind {args.kind!r}", file=sys.stderr)
            return EXIT_VALIDATION
    except analysis.AnalysisError as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.output:
        Path(args.output).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        print(f"written to {args.output}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, default_ui_dir

    registry = _registry(args)
    host, _, port = args.addr.rpartition(":")
    app = create_app(registry, ui_dir=args.ui_dir or default_ui_dir())
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        print(f"cannot bind {args.addr}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omltune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    data = sub.add_parser("data", help="inspect datasets")
    data_sub = data.add_subparsers(dest="data_command", required=True)
    show = data_sub.add_parser("show", help="print train/test summaries")
    show.add_argument("dataset_id")
    show.add_argument("--test-size", type=float, default=0.3)
    show.add_argument("--n-total", type=int, default=None)
    show.add_argument("--plots-dir", default=None, help="also write histogram/scatter CSVs")
    show.add_argument("--dir", default=None, help="artifacts directory (env OMLTUNE_DIR)")
    show.add_argument("--user-data", default=None, help="directory scanned for *.csv")
    show.set_defaults(func=cmd_data_show)

    save = sub.add_parser("save", help="validate and write an experiment spec")
    save.add_argument("--prefix", required=True)
    save.add_argument("--source", required=True, help="dataset id (bananas, sea, or userData stem)")
    save.add_argument("--n-total", type=int, default=None)
    save.add_argument("--test-size", type=float, default=0.3)
    save.add_argument("--scaler", default="none", choices=("standard", "minmax", "none"))
    save.add_argument("--target-column", default=None, help="accepted but ignored; last column wins")
    save.add_argument("--model-id", default="hoeffding_tree")
    save.add_argument("--metric", default="accuracy_score")
    save.add_argument("--horizon", type=int, default=100)
    save.add_argument("--oml-grace-period", type=int, default=None)
    save.add_argument("--weights", default="1,0,0", help="y,time,mem")
    save.add_argument("--max-time", type=float, default=10.0, help="minutes")
    save.add_argument("--fun-evals", type=int, default=15)
    save.add_argument("--init-size", type=int, default=8)
    save.add_argument("--noise", action="store_true")
    save.add_argument("--seed", type=int, default=1)
    save.add_argument("--sea-n", type=int, default=10000)
    save.add_argument("--sea-noise", type=float, default=0.0)
    save.add_argument("--sea-seed", type=int, default=42)
    save.add_argument("--sea-schedule", default="0:5000,2:5000")
    save.add_argument("-o", "--output", required=True)
    save.set_defaults(func=cmd_save)

    run = sub.add_parser("run", help="run an experiment spec to completion")
    run.add_argument("spec")
    run.add_argument("--dir", default=None)
    run.add_argument("--user-data", default=None)
    run.add_argument("--overwrite", action="store_true")
    run.set_defaults(func=cmd_run)

    analyze = sub.add_parser("analyze", help="analysis tables/data for a finished run")
    analyze.add_argument("prefix")
    analyze.add_argument(
        "--kind",
        default="compare",
        choices=("progress", "compare", "importance", "contour", "parallel", "confusion"),
    )
    analyze.add_argument("--i", type=int, default=0)
    analyze.add_argument("--j", type=int, default=1)
    analyze.add_argument("--resolution", type=int, default=50)
    analyze.add_argument("-o", "--output", default=None, help="also write the payload as JSON")
    analyze.add_argument("--dir", default=None)
    analyze.add_argument("--user-data", default=None)
    analyze.set_defaults(func=cmd_analyze)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--addr", default="127.0.0.1:6006")
    serve.add_argument("--dir", default=None)
    serve.add_argument("--user-data", default=None)
    serve.add_argument("--ui-dir", default=None, help="built web UI assets")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_INTERRUPT


if __name__ == "__main__":
    sys.exit(main())
