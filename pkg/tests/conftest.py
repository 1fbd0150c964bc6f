import json
import math
from pathlib import Path

import pytest

from a2gchan import ImpairmentSet, Sinusoidal, Uniform, Wiener, WssGaussian
from a2gchan.presets import base_scenario


@pytest.fixture(scope="session")
def frozen():
    return json.loads((Path(__file__).parent / "data" / "oracle_values.json").read_text())


@pytest.fixture(scope="session")
def sc6():
    return base_scenario(6e9)


@pytest.fixture(scope="session")
def sc24():
    return base_scenario(2.4e9)


@pytest.fixture(scope="session")
def chi_wss():
    return ImpairmentSet(chi_t=WssGaussian(1.0, 0.05), chi_r=WssGaussian(1.0, 0.05))


@pytest.fixture(scope="session")
def sin5():
    return Sinusoidal(math.radians(5.0), Uniform(5.0, 25.0))


@pytest.fixture(scope="session")
def wiener():
    return Wiener()


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.STARTED[0]:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.lines():
        terminalreporter.write_line(line)
