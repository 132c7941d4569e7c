import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polylab.qstate import haar_random_pure, make_rng, random_mixed

settings.register_profile(
    "polylab", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("polylab")

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def rng():
    return make_rng(20240611)


def haar_states(n, count, seed):
    rng = make_rng(seed)
    return [haar_random_pure(n, rng) for _ in range(count)]


def mixed_states(n, rank, count, seed):
    rng = make_rng(seed)
    return [random_mixed(n, rank, rng) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def assert_close(a, b, tol):
    assert np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol
