import pytest

from fairplan.fixtures import d1, psi1, psi2, tau1

# criterion -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def D1():
    return d1()


@pytest.fixture(scope="session")
def PSI1():
    return psi1()


@pytest.fixture(scope="session")
def PSI2():
    return psi2()


@pytest.fixture(scope="session")
def TAU1():
    return tau1()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")
