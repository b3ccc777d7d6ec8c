"""Acceptance suite: one pass/fail line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s`` (or ``slpassive verify``) to
see the lines.  Some checks take minutes on a single core.
"""

import pytest

from slpassive import acceptance


@pytest.mark.parametrize("key", list(acceptance.CHECKS))
def test_criterion(key, capsys):
    check = acceptance.CHECKS[key]()
    with capsys.disabled():
        print("\n" + check.line())
    assert check.passed, check.line()
