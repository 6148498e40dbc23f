import numpy as np
import pytest

from shapcal.dataset import Dataset, Sample


def random_instance(rng, n, num_classes=2, dim=2, integer_grid=False):
    """Random training set plus one validation sample."""
    if integer_grid:
        X = rng.integers(0, 4, size=(n, dim)).astype(float)
        x_v = rng.integers(0, 4, size=dim).astype(float)
    else:
        X = rng.normal(size=(n, dim))
        x_v = rng.normal(size=dim)
    y = rng.integers(0, num_classes, size=n)
    train = Dataset(X, y, num_classes)
    return train, Sample(0, x_v, int(rng.integers(0, num_classes)))


def line_instance(labels_near_to_far, y_v=0):
    """Points 0, 1, 2, ... on a line, queried from -1 so rank == id."""
    n = len(labels_near_to_far)
    train = Dataset(np.arange(n, dtype=float)[:, None], labels_near_to_far, 2)
    return train, Sample(0, np.array([-1.0]), y_v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
