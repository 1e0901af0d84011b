import math

import pytest

from gibbsfourier import thermo
from gibbsfourier.symbolic import cantor, gauss, lueroth

# Hausdorff dimension of continued fractions with digits 1 and 2
E2_DIM = 0.5312805062772051


@pytest.fixture(scope="session")
def G():
    return gauss()


@pytest.fixture(scope="session")
def L():
    return lueroth()


@pytest.fixture(scope="session")
def C3():
    return cantor()


@pytest.fixture(scope="session")
def gauss_tree8(G):
    return thermo.build_tree(thermo.GibbsSpec(G, (1, 2), E2_DIM, 8, 0.2))


@pytest.fixture(scope="session")
def lueroth_tree8(L):
    s = thermo.dimension_root(L, (1, 2)).value
    return thermo.build_tree(thermo.GibbsSpec(L, (1, 2), s, 8, 0.2))


@pytest.fixture(scope="session")
def golden():
    return (math.sqrt(5) - 1) / 2


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
