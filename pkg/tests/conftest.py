import numpy as np
import pytest
from hypothesis import strategies as st

from varbasis import GlobalParams, Universe, VBVector
from varbasis.scenario_io import data_path

U11 = Universe.range(11)


def vectors(universe_labels=tuple(range(1, 12)), values=None):
    """Strategy: VBVector on a random sub-basis of ``universe_labels``."""
    if values is None:
        values = st.floats(-10, 10, allow_nan=False, allow_infinity=False) | st.just(0.0)
    return st.dictionaries(st.sampled_from(universe_labels), values).map(VBVector)


@pytest.fixture
def logistic_params():
    return GlobalParams.from_dense([1], [1.0], [[-1.0]], [0.0])


@pytest.fixture
def synthetic_params():
    from varbasis import load_params

    return load_params(data_path("synthetic11.params"))


def random_glv(rng, n, labels=None):
    labels = list(range(1, n + 1)) if labels is None else labels
    rho = rng.uniform(0.1, 1.0, n)
    w = rng.uniform(-0.3, 0.1, (n, n))
    np.fill_diagonal(w, rng.uniform(-1.5, -0.5, n))
    eps = rng.uniform(-1.0, 0.0, n)
    return GlobalParams.from_dense(labels, rho, w, eps)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
