import pytest
from hypothesis import settings

from vacmirror.response import Harmonic
from vacmirror.scattering import Lorentzian, MirrorParams, Rational4

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return MirrorParams(m0=1.0, tau=1e-6, hbar=1.0)


@pytest.fixture(scope="session")
def lor():
    return Lorentzian(1e3)


@pytest.fixture(scope="session")
def rat():
    return Rational4(1e3)


@pytest.fixture(scope="session")
def osc():
    return Harmonic(1.0)


@pytest.fixture(scope="session")
def free():
    return Harmonic(0.0)


_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion():
    """Record one verdict per acceptance criterion; failures of sub-parts stick."""

    def record(number, title, ok, detail=""):
        prev = _CRITERIA.get(number)
        overall = ok and (prev is None or prev[1])
        parts = [p for p in ((prev[2] if prev else ""), detail) if p]
        _CRITERIA[number] = (title, overall, "; ".join(parts))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
