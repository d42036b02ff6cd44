import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bundlerev.distcore import DiscreteDist, ddt_instance  # noqa: E402


@pytest.fixture
def ddt():
    return ddt_instance()


@pytest.fixture
def u12():
    return DiscreteDist.from_atoms([1, 2], [0.5, 0.5])


@pytest.fixture
def u13():
    return DiscreteDist.from_atoms([1, 3], [0.5, 0.5])
