import pytest

from eulerkorteweg.model import liu_gollub_model, shallow_water_model

G = 9.8
KAPPA_SI = 0.067 / 1134.0


@pytest.fixture
def sw():
    return shallow_water_model(G, 1e-3)


@pytest.fixture
def sw_si():
    return shallow_water_model(G, KAPPA_SI)


@pytest.fixture
def lg():
    return liu_gollub_model(0.723, 0.084)


def pytest_terminal_summary(terminalreporter):
    from helpers import acceptance_lines

    lines = acceptance_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
