import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mods = [m for name, m in sys.modules.items() if name.endswith("test_acceptance") and hasattr(m, "RESULTS")]
    lines = [line for m in mods for line in m.RESULTS]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
