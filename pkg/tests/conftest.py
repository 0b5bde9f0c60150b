import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_record(request):
    """Record one acceptance line: ``record(number, passed, summary)``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, passed: bool, summary: str):
        lines.append((number, passed, summary))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, summary in sorted(lines):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {summary}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_products(mats, n):
    """All length-n products in lexicographic word order, with their words."""
    import itertools
    out = []
    for word in itertools.product(range(len(mats)), repeat=n):
        p = np.eye(mats[0].shape[0], dtype=complex)
        for k in word:
            p = p @ mats[k]
        out.append((word, p))
    return out
