import numpy as np
import pytest

from kinex import ClassSystem, find_equilibrium, vertex

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def default_system():
    return ClassSystem.build()


@pytest.fixture(scope="session")
def fast_system():
    """S / delta_r = 0.1: ten times faster relaxation than the default model."""
    return ClassSystem.build(10, 10.0, 1.0)


@pytest.fixture(scope="session")
def equilibrium(default_system):
    return find_equilibrium(vertex(3, 10), default_system).state


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    def record(criterion: str, passed: bool, detail: str):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
