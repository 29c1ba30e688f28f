from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# (criterion, label, passed, detail) rows recorded by test_acceptance.py
ACCEPTANCE = []


def _order(row):
    label = str(row[0])
    digits = label.rstrip("abcdefghijklmnopqrstuvwxyz")
    return int(digits), label


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, passed, detail in sorted(ACCEPTANCE, key=_order):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {number:<3} {label}: {detail}")
