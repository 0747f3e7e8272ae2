import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None)
settings.load_profile("default")

from pinswitch import instances  # noqa: E402
from pinswitch.markov import assemble_generator  # noqa: E402


@pytest.fixture
def slow_topo():
    return instances.slow_topology()


@pytest.fixture
def slow_gen():
    return assemble_generator(instances.SLOW_EMBEDDED, np.full(5, 0.5))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
