import pytest

from coinflow.rng import Stream


@pytest.fixture
def rng():
    return Stream(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import SUMMARY, TITLES
    except ImportError:
        return
    if not SUMMARY:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(SUMMARY):
        passed, lines = SUMMARY[number]
        tr.write_line(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {TITLES[number]}")
        for line in lines:
            if line.startswith("[FAIL]"):
                tr.write_line(f"    {line}")
