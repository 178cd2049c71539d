import numpy as np
import pytest

from strip_bloch.fiber import StripPotential


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def defect():
    return StripPotential.single_defect(-1.5)


@pytest.fixture
def random_potential(rng):
    return StripPotential.random(3, 2, 2.5, rng)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record and assert one acceptance line: ``criterion(n, ok, detail)``."""

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
