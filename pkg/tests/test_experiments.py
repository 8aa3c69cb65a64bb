import json
import time

import numpy as np
import pytest

from omltune.dataspace import DatasetRegistry
from omltune.evaluation import HorizonEvalConfig, WeightVector, weighted_objective
from omltune.experiments import (
    DataOptions,
    DuplicatePrefixError,
    ExperimentRegistry,
    ExperimentSpec,
    UnknownExperimentError,
    ValidationError,
    WrongFileKindError,
    load_results,
    load_spec,
    save_spec,
    spec_from_dict,
    spec_sha256,
    spec_to_dict,
    state_from_results,
)
from omltune.metrics import METRIC_IDS, MetricDirection
from omltune.searchspace import builtin_space
from omltune.tuner import TunerControl


def make_spec(prefix="exp1", fun_evals=4, init_size=2, **overrides) -> ExperimentSpec:
    sea = {"n": 600, "noise_frac": 0.1, "seed": 7, "schedule": [[0, 300], [2, 300]]}
    fields = dict(
        prefix=prefix,
        data=DataOptions(source="sea", test_size=0.3, scaler="none", sea=sea),
        model_id="hoeffding_tree",
        space=builtin_space("hoeffding_tree"),
        eval=HorizonEvalConfig(horizon=45, metric="accuracy_score"),
        weights=WeightVector(1, 0, 0),
        control=TunerControl(
            max_time_minutes=5.0,
            fun_evals=fun_evals,
            init_size=init_size,
            seed=3,
            prefix=prefix,
        ),
    )
    fields.update(overrides)
    return ExperimentSpec(**fields)


def random_valid_spec(rng) -> ExperimentSpec:
    model_id = rng.choice(["hoeffding_tree", "logistic_regression"])
    prefix = "exp_" + "".join(rng.choice(list("abcdef0123456789"), size=8))
    metric = str(rng.choice(METRIC_IDS))
    grace = None if rng.random() < 0.5 else int(rng.integers(0, 50))
    n_total = None if rng.random() < 0.5 else int(rng.integers(100, 1000))
    return make_spec(
        prefix=prefix,
        model_id=model_id,
        space=builtin_space(model_id),
        data=DataOptions(
            source=str(rng.choice(["sea", "bananas"])),
            test_size=float(rng.uniform(0.1, 0.9)),
            n_total=n_total,
            scaler=str(rng.choice(["standard", "minmax", "none"])),
            target_column=None,
            sea={"n": 500, "noise_frac": 0.05, "seed": 1, "schedule": [[1, 500]]},
        ),
        eval=HorizonEvalConfig(
            horizon=int(rng.integers(1, 200)),
            oml_grace_period=grace,
            metric=metric,
        ),
        weights=WeightVector(
            y=float(rng.normal()), time=float(rng.normal()), mem=float(rng.normal())
        ),
        control=TunerControl(
            max_time_minutes=float(rng.uniform(0.1, 60)),
            fun_evals=int(rng.integers(1, 50)),
            init_size=int(rng.integers(1, 20)),
            noise=bool(rng.random() < 0.5),
            seed=int(rng.integers(0, 2**31)),
            prefix=prefix,
        ),
    )


class TestSpecPersistence:
    def test_roundtrip_equality(self, tmp_path):
        spec = make_spec()
        path = save_spec(spec, tmp_path)
        assert path.name == "exp1.spec.json"
        assert load_spec(path) == spec

    def test_randomized_roundtrips(self, tmp_path):
        rng = np.random.default_rng(0)
        for _ in range(25):
            spec = random_valid_spec(rng)
            assert load_spec(save_spec(spec, tmp_path)) == spec

    def test_validation_lists_every_violation(self):
        payload = spec_to_dict(make_spec())
        payload["data"]["test_size"] = 1.5
        payload["eval"]["metric"] = "nope"
        payload["control"]["fun_evals"] = 0
        with pytest.raises(ValidationError) as err:
            spec_from_dict(payload)
        text = "\n".join(err.value.problems)
        assert "test_size" in text
        assert "metric" in text
        assert "fun_evals" in text

    def test_wrong_kind_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"kind": "experiment_results", "format_version": 1}))
        with pytest.raises(WrongFileKindError):
            load_spec(path)

    def test_version_mismatch(self, tmp_path):
        payload = spec_to_dict(make_spec())
        payload["format_version"] = 999
        path = tmp_path / "v.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ValidationError, match="format_version"):
            load_spec(path)

    def test_registry_fixed_fields_rejected(self):
        payload = spec_to_dict(make_spec())
        for row in payload["space"]:
            if row["name"] == "max_depth":
                row["transform"] = "none"
        with pytest.raises(ValidationError, match="transform"):
            spec_from_dict(payload)

    def test_narrowed_space_roundtrips(self, tmp_path):
        payload = spec_to_dict(make_spec())
        for row in payload["space"]:
            if row["name"] == "grace_period":
                row["lower"], row["upper"] = 50.0, 400.0
            if row["name"] == "leaf_prediction":
                row["selected_levels"] = ["mc", "nba"]
        spec = spec_from_dict(payload)
        gp = next(p for p in spec.space.params if p.name == "grace_period")
        assert (gp.lower, gp.upper) == (50.0, 400.0)
        lp = next(p for p in spec.space.params if p.name == "leaf_prediction")
        assert lp.selected_levels == ("mc", "nba")
        assert load_spec(save_spec(spec, tmp_path)) == spec

    def test_sha_stable(self):
        a = spec_sha256(make_spec())
        b = spec_sha256(make_spec())
        assert a == b
        c = spec_sha256(make_spec(prefix="other", control=TunerControl(prefix="other")))
        assert a != c


class TestRegistryLifecycle:
    def test_run_to_completion_and_results(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        spec = make_spec()
        experiment_id = registry.start(spec)
        registry.wait(experiment_id, timeout=120)
        status = registry.status(experiment_id)
        assert status.state == "finished"
        assert status.trials_done == 4
        payload = load_results(tmp_path / "exp1.results.json")
        assert payload["prefix"] == "exp1"
        assert payload["spec_sha256"] == spec_sha256(spec)
        assert len(payload["trials"]) == 4

    def test_objectives_recompute_exactly(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        spec = make_spec(
            prefix="exact",
            control=TunerControl(
                max_time_minutes=5, fun_evals=3, init_size=2, seed=5, prefix="exact"
            ),
            weights=WeightVector(1.0, 0.25, 0.5),
        )
        registry.start(spec)
        registry.wait("exact", timeout=120)
        payload = load_results(tmp_path / "exact.results.json")
        for trial in payload["trials"]:
            if not trial["ok"]:
                continue
            e = trial["eval"]
            recomputed = weighted_objective(
                e["metric_mean"],
                MetricDirection(e["direction"]),
                e["total_time_s"],
                e["final_memory_mb"],
                WeightVector(**e["weights"]),
            )
            assert recomputed == trial["objective"]  # bit-exact

    def test_duplicate_prefix_rejected_while_running(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        spec = make_spec(prefix="dup", fun_evals=8, init_size=8)
        spec = make_spec(
            prefix="dup",
            control=TunerControl(
                max_time_minutes=5, fun_evals=8, init_size=8, prefix="dup"
            ),
        )
        registry.start(spec)
        with pytest.raises(DuplicatePrefixError):
            registry.start(spec)
        registry.wait("dup", timeout=120)
        with pytest.raises(DuplicatePrefixError):
            registry.start(spec)
        registry.start(spec, overwrite=True)
        registry.wait("dup", timeout=120)

    def test_stop_mid_run_leaves_complete_results(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        spec = make_spec(
            prefix="stopme",
            data=DataOptions(
                source="sea",
                test_size=0.3,
                sea={"n": 4000, "noise_frac": 0.1, "seed": 2, "schedule": [[0, 2000], [2, 2000]]},
            ),
            control=TunerControl(
                max_time_minutes=5, fun_evals=40, init_size=30, seed=1, prefix="stopme"
            ),
        )
        registry.start(spec)
        while registry.status("stopme").trials_done < 2:
            time.sleep(0.02)
        registry.stop("stopme")
        registry.wait("stopme", timeout=120)
        status = registry.status("stopme")
        assert status.state == "stopped"
        assert status.trials_done < 40
        payload = load_results(tmp_path / "stopme.results.json")
        assert payload["status"]["state"] == "stopped"
        state = state_from_results(payload)
        assert len(state.trials) == status.trials_done

    def test_stop_is_idempotent_after_finish(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        registry.start(make_spec(prefix="idem", control=TunerControl(
            max_time_minutes=5, fun_evals=2, init_size=1, prefix="idem")))
        registry.wait("idem", timeout=120)
        before = registry.status("idem").state
        after = registry.stop("idem").state
        assert before == after == "finished"

    def test_unknown_id(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        with pytest.raises(UnknownExperimentError):
            registry.status("ghost")
        with pytest.raises(UnknownExperimentError):
            registry.stop("ghost")

    def test_restart_relists_experiments(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        registry.start(make_spec(prefix="persist", control=TunerControl(
            max_time_minutes=5, fun_evals=2, init_size=1, prefix="persist")))
        registry.wait("persist", timeout=120)
        save_spec(make_spec(prefix="justsaved", control=TunerControl(prefix="justsaved")), tmp_path)

        fresh = ExperimentRegistry(directory=tmp_path)
        listing = {s.id: s.state for s in fresh.list()}
        assert listing["persist"] == "finished"
        assert listing["justsaved"] == "saved"
        # events and analyzable state survive the restart
        events = fresh.events("persist", from_index=0)
        assert len(events) == 2
        state = fresh.state_of("persist")
        assert len(state.trials) == 2

    def test_events_replay_from_index(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        registry.start(make_spec(prefix="ev", control=TunerControl(
            max_time_minutes=5, fun_evals=3, init_size=2, prefix="ev")))
        registry.wait("ev", timeout=120)
        full = registry.events("ev", from_index=0)
        assert [e["trial_index"] for e in full] == [1, 2, 3]
        tail = registry.events("ev", from_index=2)
        assert [e["trial_index"] for e in tail] == [3]

    def test_state_reconstruction_preserves_analysis(self, tmp_path):
        from omltune import analysis

        registry = ExperimentRegistry(directory=tmp_path)
        registry.start(make_spec(prefix="recon", control=TunerControl(
            max_time_minutes=5, fun_evals=4, init_size=2, seed=9, prefix="recon")))
        registry.wait("recon", timeout=120)
        live = registry.state_of("recon")
        rebuilt = state_from_results(load_results(tmp_path / "recon.results.json"))
        live_rows = analysis.compare_default_tuned(live)
        rebuilt_rows = analysis.compare_default_tuned(rebuilt)
        for a, b in zip(live_rows, rebuilt_rows):
            assert a.name == b.name and a.tuned == b.tuned
            assert a.importance == pytest.approx(b.importance, abs=1e-9)
        assert analysis.confusion_for_best(live) == analysis.confusion_for_best(rebuilt)

    def test_atomic_results_no_tmp_left_behind(self, tmp_path):
        registry = ExperimentRegistry(directory=tmp_path)
        registry.start(make_spec(prefix="atomic", control=TunerControl(
            max_time_minutes=5, fun_evals=2, init_size=1, prefix="atomic")))
        registry.wait("atomic", timeout=120)
        assert not list(tmp_path.glob("*.tmp"))
        assert (tmp_path / "atomic.results.json").exists()


class TestBuildSplits:
    def test_bananas_source(self):
        from omltune.experiments import build_splits

        data = DataOptions(source="bananas", test_size=0.3)
        train, test = build_splits(data, DatasetRegistry())
        assert len(train) == 3710 and len(test) == 1590

    def test_sea_options_respected(self):
        from omltune.experiments import build_splits

        data = DataOptions(
            source="sea",
            test_size=0.5,
            sea={"n": 100, "noise_frac": 0.0, "seed": 3, "schedule": [[1, 100]]},
        )
        train, test = build_splits(data, DatasetRegistry())
        assert len(train) == 50 and len(test) == 50
