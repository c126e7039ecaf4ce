import sys
from pathlib import Path

import pytest

# make pool_fixtures importable regardless of which directory pytest runs from
sys.path.insert(0, str(Path(__file__).parent))

from pool_fixtures import separable_pool  # noqa: E402


@pytest.fixture()
def pool50():
    return separable_pool(50)
