import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import build_p1


@pytest.fixture
def p1():
    return build_p1()
