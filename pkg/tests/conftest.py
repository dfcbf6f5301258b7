import os

import numpy as np
import pytest

SLOW = os.environ.get("PROJCAUCHY_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo runs, enabled with PROJCAUCHY_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if SLOW:
        return
    skip = pytest.mark.skip(reason="set PROJCAUCHY_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
