import sys
from pathlib import Path

import pytest

from sfdoi_cvrp.instance import Instance

sys.path.insert(0, str(Path(__file__).parent))

# T4: depot (0,0), a=(0,3), b=(4,0), e=(0,6); unit demands, K=10
A, B, E, END = 1, 2, 3, 4


@pytest.fixture
def t4() -> Instance:
    return Instance.from_coords((0, 0), [(0, 3), (4, 0), (0, 6)], [1, 1, 1], 10, name="T4")
