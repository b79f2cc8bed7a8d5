import numpy as np

from xrgate.model import Pose


def random_unit_quat(rng) -> tuple:
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    return tuple(q)


def random_pose(rng, scale: float = 1.0) -> Pose:
    return Pose(tuple(rng.uniform(-scale, scale, 3)), random_unit_quat(rng))
