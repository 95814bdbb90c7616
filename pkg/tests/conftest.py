import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from netclear import fixtures


@pytest.fixture
def ring3():
    return fixtures.ring3()


@pytest.fixture
def chain():
    return fixtures.chain()


@pytest.fixture
def asym():
    return fixtures.asym()


@pytest.fixture
def prio():
    return fixtures.prio()


@pytest.fixture
def twocycle():
    return fixtures.twocycle()


@pytest.fixture
def twochains():
    return fixtures.twochains()
