import math
import random

import pytest

from pointt2i.fixtures import standing_pose, t_pose
from pointt2i.pose import JOINT_ORDER, JointId, Pose3D


@pytest.fixture
def standing():
    return standing_pose()


@pytest.fixture
def tpose():
    return t_pose()


def random_pose(rng: random.Random, spread: float = 1.0) -> Pose3D:
    """Random valid pose: finite coordinates, everything on or above ground."""
    return Pose3D({
        j: (rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(0, 2 * spread))
        for j in JOINT_ORDER
    })


def yes_reply(reason: str = "looks right") -> str:
    return f"Answer: ['Yes']\nReason: ['{reason}']"


def no_reply(pose: Pose3D, reason: str = "wrong") -> str:
    from pointt2i.protocol import PoseAnalysis, serialize_analysis

    body = serialize_analysis(PoseAnalysis.single(pose, "revised action"))
    return f"{body}Answer: ['No']\nReason: ['{reason}']"


def generator_reply(pose: Pose3D, action: str = "doing the pose") -> str:
    from pointt2i.protocol import PoseAnalysis, serialize_analysis

    return serialize_analysis(PoseAnalysis.single(pose, action))
