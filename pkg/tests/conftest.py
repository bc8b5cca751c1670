import sys
from pathlib import Path

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

hypothesis.settings.register_profile("fast", max_examples=10)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.load_profile("ci")

from mibids.schema import INTERFACE_8, Dataset  # noqa: E402
from mibids.synth import generate  # noqa: E402


@pytest.fixture(scope="session")
def synth_default():
    return generate()


def make_dataset(X, y=None, schema=INTERFACE_8):
    X = np.asarray(X, dtype=float)
    return Dataset(tuple(schema[: X.shape[1]]), X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
