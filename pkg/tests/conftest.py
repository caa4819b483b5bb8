import os
from pathlib import Path

import pytest

from riskfusion import dataset

ACCEPTANCE_LINES = []


def _cache_complete(path):
    index = Path(path) / "index"
    if not index.exists():
        return False
    names = {line.split()[0] for line in index.read_text().splitlines() if line.strip()}
    return names >= set(dataset.FEATURE_SETS)


@pytest.fixture(scope="session")
def mfeat_cache(tmp_path_factory):
    """A cache directory holding all six mfeat files.

    Uses ``RISKFUSION_CACHE_DIR`` when it is already populated, otherwise
    installs the CSV copies shipped with mvlearn into a temporary cache.
    """
    env = os.environ.get("RISKFUSION_CACHE_DIR")
    if env and _cache_complete(env):
        return Path(env)
    mirror = dataset.find_mvlearn_mirror()
    if mirror is None:
        pytest.skip("mfeat data unavailable: no populated cache and no mvlearn mirror")
    cache = tmp_path_factory.mktemp("mfeat-cache")
    dataset.import_directory(mirror, cache)
    return cache


@pytest.fixture(scope="session")
def feature_sets(mfeat_cache):
    return dataset.load_all(mfeat_cache, base_url="http://invalid.invalid")


@pytest.fixture
def report():
    """Record a one-line pass/fail verdict for the acceptance summary."""

    def record(criterion, passed, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
