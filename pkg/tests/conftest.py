import pathlib

import pytest

from dlpcf import checker as ck
from dlpcf import index as ix
from dlpcf import pcf

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def arith():
    return ix.load_equations(FIXTURES / "arith.eqs")


@pytest.fixture(scope="session")
def ktab():
    return ix.load_equations(FIXTURES / "ktab.eqs")


@pytest.fixture(scope="session")
def dbl_term():
    return pcf.parse_term((FIXTURES / "dbl.pcf").read_text())


@pytest.fixture(scope="session")
def omega_term():
    return pcf.parse_term((FIXTURES / "omega.pcf").read_text())


@pytest.fixture(scope="session")
def dbl_derivation(dbl_term):
    return ck.bind(ck.load_derivation(FIXTURES / "dbl.deriv"), dbl_term)
