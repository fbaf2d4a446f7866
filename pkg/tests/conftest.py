import math
import os

# allow several numba workers even on a one-core machine, so worker-count
# independence can be exercised; must happen before numba is imported
os.environ.setdefault("NUMBA_NUM_THREADS", "4")
import numpy as np
import pytest

from classifiability import _accel
from classifiability.core import ClassTable, validate_dataset


def pytest_configure(config):
    # registered here rather than in pyproject so numba is imported only after
    # NUMBA_NUM_THREADS has been set above
    config.addinivalue_line("filterwarnings", "ignore::numba.NumbaPerformanceWarning")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run a test once per kernel backend."""
    previous = _accel.use_numba(request.param == "numba")
    if request.param == "numba" and not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    yield request.param
    _accel.use_numba(previous)


def make_dataset(X, y, n_classes=None):
    y = np.asarray(y)
    n_classes = n_classes or int(y.max()) + 1
    return validate_dataset(X, y, ClassTable.numbered(n_classes))


def random_dataset(rng, n, d=2, n_classes=2, integer=False):
    """Continuous random features; every class present."""
    if integer:
        X = rng.integers(0, 4, size=(n, d)).astype(float)
    else:
        X = rng.normal(size=(n, d))
    y = rng.integers(0, n_classes, size=n)
    y[:n_classes] = np.arange(n_classes)
    return make_dataset(X, y, n_classes)


def majority_excess(k):
    """E|B/k - 1/2| for B ~ Binomial(k, 1/2): how far a k-neighbor majority share
    sits above 1/2 on average when both classes are equally likely."""
    return sum(math.comb(k, b) * abs(b / k - 0.5) for b in range(k + 1)) / 2 ** k


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
