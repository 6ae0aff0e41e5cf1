import pytest

from susyband.scenarios import band_structure_for, run_scenario
from susyband.potentials import lame

_RUN_CACHE = {}


@pytest.fixture(scope="session")
def scenario_cache():
    """Run scenarios lazily and share the results across the whole session;
    each one costs seconds, and several tests interrogate the same run."""

    def get(name):
        if name not in _RUN_CACHE:
            _RUN_CACHE[name] = run_scenario(name)
        return _RUN_CACHE[name]

    return get


@pytest.fixture(scope="session")
def lame_bands():
    def get(n, m=0.5):
        return band_structure_for(lame(n, m))

    return get
