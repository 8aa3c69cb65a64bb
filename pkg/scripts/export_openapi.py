"""Regenerate openapi.json from the live FastAPI app definition."""

import json
from pathlib import Path

from omltune.dataspace import DatasetRegistry
from omltune.experiments import ExperimentRegistry
from omltune.service import create_app

OUT = Path(__file__).resolve().parents[1] / "openapi.json"


def main() -> None:
    registry = ExperimentRegistry(directory="/tmp/omltune-openapi", datasets=DatasetRegistry())
    app = create_app(registry)
    OUT.write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
