"""The fourteen acceptance criteria; each prints one pass/fail line."""

import pytest

from orbitcount.acceptance import CRITERIA, format_result

ACCEPTANCE_LINES = []


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_acceptance_criterion(number):
    res = CRITERIA[number]()
    line = format_result(res)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, res.detail
    assert res.within_time, f"took {res.seconds:.1f} s, limit {res.time_limit} s"
