import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pdnopt.touchstone import FrequencyGrid


@pytest.fixture
def grid30() -> FrequencyGrid:
    """30 points/decade, 1 kHz to 1 GHz."""
    return FrequencyGrid(np.logspace(3, 9, 181))
