"""One test per acceptance criterion, plus the detailed-balance negative control.

Each check reports measured values next to the expected band; the lines are
collected and echoed in the terminal summary.
"""

import pytest

from abtransport.liouvillian import Numerics
from abtransport.validation import CHECKS, check_generator_sanity

REPORT = []


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{k:02d}_{c.__name__[6:]}" for k, c in enumerate(CHECKS, start=1)])
def test_criterion(check):
    result = check(Numerics())
    REPORT.append(result.line())
    print(result.line())
    assert result.passed, result.line()


def test_negative_control_detailed_balance():
    result = check_generator_sanity(Numerics(detailed_balance_skew=0.01))
    line = "[negative control] " + result.line()
    REPORT.append(line)
    print(line)
    assert not result.passed
    assert result.details["detailed_balance"] > 1e-3
