import os

import pytest
from hypothesis import HealthCheck, settings

from symprune.experiments import desk_config, run_sweep

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def desk_sweep_result():
    """The default-configuration sweep, run once and shared.

    This is the suite's expensive fixture (a couple of minutes); every test
    that needs full-sweep statistics reads from it instead of re-running.
    """
    workers = min(4, os.cpu_count() or 1)
    return run_sweep(desk_config(), workers=workers)
