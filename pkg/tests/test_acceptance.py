"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the measured
margins; the lines are repeated in the terminal summary by ``conftest.py``.
The preset runs behind criteria 2 and 7-10 are shared through the suite
cache, so the first of them pays for the long integrations.
"""

import pytest

from outerpress.harness.suites import ALL_CRITERIA

RESULTS = []


@pytest.mark.slow
@pytest.mark.parametrize("criterion", ALL_CRITERIA, ids=lambda fn: fn.__name__)
def test_acceptance(criterion):
    c = criterion()
    line = c.line()
    RESULTS.append(line)
    print(line)
    assert c.passed, line
