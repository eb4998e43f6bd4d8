import datetime as dt

import numpy as np
import pytest

from trackimpute.bootstrap import METERS_CALIBRATED, sample_params
from trackimpute.core import ModelParams, PlanarPoint, Receiver, SegmentSpec
from trackimpute.ingest import build_segments, collapse_daily
from trackimpute.synthetic import day_pattern

UTC = dt.timezone.utc


def grid_receivers(n=4, spacing=5000.0):
    """``n`` receivers on a line running north-east, ids "A", "B", ..."""
    return {
        chr(65 + i): Receiver(chr(65 + i), PlanarPoint(i * spacing, 0.6 * i * spacing))
        for i in range(n)
    }


def specs_for_days(days, receivers=None):
    receivers = receivers or grid_receivers(len(days))
    ids = list(receivers)[: len(days)]
    return build_segments(collapse_daily(day_pattern("f", days, ids)), receivers)


@pytest.fixture
def receivers():
    return grid_receivers()


@pytest.fixture
def twelve_day_specs():
    return specs_for_days((1, 5, 10, 12))


@pytest.fixture
def params():
    return ModelParams(alpha=1.0, beta=3, gamma=0.2, phi=1.4, sigma_r_sq=20000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_params():
    def make(rng):
        return sample_params(METERS_CALIBRATED, rng)

    return make


@pytest.fixture
def single_spec():
    a = Receiver("a", PlanarPoint(0.0, 0.0))
    b = Receiver("b", PlanarPoint(8000.0, 3000.0))
    return SegmentSpec("f", 1, a, b, 6)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
