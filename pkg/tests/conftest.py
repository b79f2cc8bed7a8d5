import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xrgate.model import Pose
from xrgate.simulator import synthetic_hand, synthetic_handle


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)


@pytest.fixture
def make_hand():
    def build(pose: Pose = Pose.identity(), handedness: str = "right"):
        return synthetic_hand(pose, handedness)

    return build


@pytest.fixture
def make_handle():
    def build(pose: Pose = Pose.identity(), handedness: str = "right"):
        return synthetic_handle(pose, handedness)

    return build
