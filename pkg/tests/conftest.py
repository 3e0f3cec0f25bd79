from fractions import Fraction

import pytest

from tmsl.geometry import InfluenceTable
from tmsl.machine import DETECT_A0, DETECT_A1, DETECT_A_INPUTS
from tmsl.propagation import propagate_inputs

ACCEPTANCE = {}


def record(n, ok, detail):
    ACCEPTANCE[n] = (ok, detail)
    print(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


UNIFORM = {x: Fraction(1, 6) for x in DETECT_A_INPUTS}


@pytest.fixture(scope="session")
def detect_props():
    return propagate_inputs(DETECT_A0, DETECT_A_INPUTS, 2, k_max=2)


@pytest.fixture(scope="session")
def detect_table(detect_props):
    return InfluenceTable(detect_props, UNIFORM)


@pytest.fixture(scope="session")
def detect1_table():
    return InfluenceTable(propagate_inputs(DETECT_A1, DETECT_A_INPUTS, 2, k_max=1), UNIFORM)
