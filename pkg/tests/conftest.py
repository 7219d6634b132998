import numpy as np
import pytest

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)`` for the end-of-run summary and assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def report(criterion: int, passed: bool, detail: str):
        lines[criterion] = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        assert passed, detail

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
