"""Acceptance gate: runs every primary criterion end to end and prints one
pass/fail line per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines, or use
the `kineticmarket verify` subcommand for the same suite standalone.
"""

import pytest

from kineticmarket.acceptance import ALL_CRITERIA


@pytest.mark.parametrize("criterion", ALL_CRITERIA, ids=lambda c: c.__name__)
def test_criterion(criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print(result.line())
    assert result.passed, result.line()
