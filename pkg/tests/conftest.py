import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("lapbox", deadline=None, max_examples=40)
settings.load_profile("lapbox")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Collects one ``(criterion, passed, detail)`` line per acceptance criterion."""
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(lines):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail}")
