import numpy as np
import pytest

from squeezega.spin_core import build_spin_operators, coherent_spin_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=[1, 2, 5, 10])
def ops(request):
    return build_spin_operators(request.param)


@pytest.fixture
def x_css():
    def make(ops):
        return coherent_spin_state(ops, np.pi / 2, 0.0)
    return make


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the lines are echoed in the terminal summary."""
    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
