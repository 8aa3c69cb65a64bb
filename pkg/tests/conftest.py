import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from omltune.dataspace import DataSchema, Dataset, bananas_fixture_path, load_csv


@pytest.fixture(scope="session")
def bananas():
    return load_csv(bananas_fixture_path())


@pytest.fixture
def tiny_dataset():
    schema = DataSchema(("x1", "x2"), "y")
    rng = np.random.default_rng(0)
    features = rng.uniform(size=(40, 2))
    labels = (features[:, 0] > 0.5).astype(np.int64)
    return Dataset(schema, features, labels, "tiny")


class ConstantClassifier:
    """Test stub: fixed probability, counts learn calls, fixed memory."""

    def __init__(self, proba=1.0, memory=2**20):
        self.proba = proba
        self.memory = memory
        self.learned = 0

    def learn_one(self, x, y):
        self.learned += 1

    def predict_proba_one(self, x):
        return self.proba

    def predict_one(self, x):
        return 1 if self.proba >= 0.5 else 0

    def memory_bytes(self):
        return self.memory


@pytest.fixture
def constant_classifier_cls():
    return ConstantClassifier


_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{outcome}  {name}")
