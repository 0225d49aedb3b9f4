"""Shared fixtures.

The flagship 30-day run takes about half a minute, so it is computed once per
session and shared by every test that needs it.  Acceptance results collected
by tests/test_acceptance.py are echoed in the terminal summary, one line per
criterion.
"""

import pytest

import powpos
from powpos import simnet


# (criterion number, label, passed, detail) tuples filled by test_acceptance.
ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def baseline_report():
    """The full 30-day flagship run (slow; shared across the session)."""
    return simnet.run(powpos.baseline_config())


@pytest.fixture(scope="session")
def quick_report():
    """Six-hour variant, for tests that only need a realistic chain."""
    return simnet.run(powpos.quick_config())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {label}: {detail}")
