"""Acceptance suite: every criterion runs at its stated tolerance and prints
one pass/fail line (visible with `pytest -s` or in the captured output)."""

import pytest

from symspectra.selftest import ALL_CHECKS, _Context


@pytest.fixture(scope="module")
def ctx():
    return _Context()


@pytest.mark.parametrize("check", ALL_CHECKS,
                         ids=[c.__name__.replace("check_", "") for c in ALL_CHECKS])
def test_criterion(check, ctx):
    result = check(ctx)
    print(result.line())
    assert result.passed, result.line()
