"""Driving the HTTP service: experiment lifecycle over the JSON API.

Starts the service in-process, configures an experiment the same way the
web UI does, polls the live event stream, and fetches analysis payloads.
With a running `omltune serve` you can do the same from anywhere with
plain HTTP; swap the TestClient for httpx/requests against the address.
"""

import tempfile
import time

from fastapi.testclient import TestClient

from omltune.dataspace import DatasetRegistry
from omltune.experiments import ExperimentRegistry
from omltune.service import create_app

workdir = tempfile.mkdtemp(prefix="omltune-demo-")
registry = ExperimentRegistry(directory=workdir, datasets=DatasetRegistry())
client = TestClient(create_app(registry))

print("datasets on offer:")
for row in client.get("/api/datasets").json():
    print(f"  {row['id']:<10} rows={row['n_rows']:<6} features={row['n_features']}")

summary = client.get("/api/datasets/bananas/summary?test_size=0.3").json()
print(f"\nbananas train rows: {summary['train']['y']['count']:.0f}, "
      f"test rows: {summary['test']['y']['count']:.0f}")

spec = {
    "format_version": 1,
    "kind": "experiment_spec",
    "prefix": "api_demo",
    "data": {
        "source": "sea",
        "test_size": 0.3,
        "scaler": "none",
        "sea": {"n": 1500, "noise_frac": 0.1, "seed": 5, "schedule": [[0, 750], [2, 750]]},
    },
    "model_id": "hoeffding_tree",
    "eval": {"horizon": 90, "oml_grace_period": None, "metric": "accuracy_score"},
    "weights": {"y": 1.0, "time": 0.0, "mem": 0.0},
    "control": {"max_time_minutes": 5.0, "fun_evals": 8, "init_size": 4, "noise": False, "seed": 2},
}

created = client.post("/api/experiments", json=spec).json()
print(f"\nstarted experiment {created['id']!r} (state={created['state']})")

# live progress by incremental polling, exactly like the web UI
seen = 0
while True:
    batch = client.get(f"/api/experiments/api_demo/events?from={seen}").json()
    for event in batch["events"]:
        print(f"  trial {event['trial_index']:>2} [{event['phase']:<14}] "
              f"objective={event['objective']:+.4f} best={event['best_so_far']:+.4f}")
    seen = batch["next"]
    status = client.get("/api/experiments/api_demo").json()
    if status["state"] != "running":
        break
    time.sleep(0.2)

print(f"\nfinal state: {status['state']}, best objective {status['best_objective']:+.4f}")

compare = client.get("/api/experiments/api_demo/analysis/compare").json()
print("\n" + compare["text"])

confusion = client.get("/api/experiments/api_demo/analysis/confusion").json()
print(f"\nbest-trial confusion: {confusion}")
print(f"\nartifacts persisted under {workdir}")
