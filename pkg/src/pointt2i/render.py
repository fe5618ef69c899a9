"""Conditioning artifacts for image generators.

Two outputs: a normalized keypoint list (for generators that take keypoints
directly) and an OpenPose-convention body-18 skeleton raster (for generators
conditioned on skeleton images). The 18-point layout adds a synthesized Neck
at the shoulder midpoint, which the COCO-17 set lacks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import NotNormalized
from .pose import JointId
from .projection import Projection2D
from .raster import RGB, Canvas

# OpenPose body-18 index order:
# 0 Nose, 1 Neck, 2 RShoulder, 3 RElbow, 4 RWrist, 5 LShoulder, 6 LElbow,
# 7 LWrist, 8 RHip, 9 RKnee, 10 RAnkle, 11 LHip, 12 LKnee, 13 LAnkle,
# 14 REye, 15 LEye, 16 REar, 17 LEar
_COCO_TO_OPENPOSE18: dict[JointId, int] = {
    JointId.Nose: 0,
    JointId.RightShoulder: 2,
    JointId.RightElbow: 3,
    JointId.RightWrist: 4,
    JointId.LeftShoulder: 5,
    JointId.LeftElbow: 6,
    JointId.LeftWrist: 7,
    JointId.RightHip: 8,
    JointId.RightKnee: 9,
    JointId.RightAnkle: 10,
    JointId.LeftHip: 11,
    JointId.LeftKnee: 12,
    JointId.LeftAnkle: 13,
    JointId.RightEye: 14,
    JointId.LeftEye: 15,
    JointId.RightEar: 16,
    JointId.LeftEar: 17,
}
NECK_INDEX = 1

# The palette ControlNet-style pose conditioning was trained on.
OPENPOSE18_COLORS: tuple[RGB, ...] = (
    (255, 0, 0),
    (255, 85, 0),
    (255, 170, 0),
    (255, 255, 0),
    (170, 255, 0),
    (85, 255, 0),
    (0, 255, 0),
    (0, 255, 85),
    (0, 255, 170),
    (0, 255, 255),
    (0, 170, 255),
    (0, 85, 255),
    (0, 0, 255),
    (85, 0, 255),
    (170, 0, 255),
    (255, 0, 255),
    (255, 0, 170),
    (255, 0, 85),
)

# Limb connections between body-18 indices, OpenPose draw order.
OPENPOSE18_LIMBS: tuple[tuple[int, int], ...] = (
    (1, 2),
    (1, 5),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (1, 8),
    (8, 9),
    (9, 10),
    (1, 11),
    (11, 12),
    (12, 13),
    (1, 0),
    (0, 14),
    (14, 16),
    (0, 15),
    (15, 17),
)


@dataclass(frozen=True)
class SkeletonStyle:
    canvas_size: int = 512
    background: RGB = (0, 0, 0)
    joint_radius: float = 4.0
    limb_thickness: float = 4.0
    colors: tuple[RGB, ...] = OPENPOSE18_COLORS
    limbs: tuple[tuple[int, int], ...] = OPENPOSE18_LIMBS

    def __post_init__(self) -> None:
        if len(self.colors) != 18:
            raise ValueError("color table must have 18 entries")
        for a, b in self.limbs:
            if not (0 <= a < 18 and 0 <= b < 18):
                raise ValueError(f"limb index out of range: ({a}, {b})")


@dataclass(frozen=True)
class KeypointConditioning:
    """17 points in [0,1]^2, canonical joint order, one person."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.points) != 17:
            raise ValueError("expected 17 keypoints")

    def to_dict(self) -> dict:
        return {"people": [{"keypoints": [list(p) for p in self.points]}]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "KeypointConditioning":
        points = data["people"][0]["keypoints"]
        return cls(tuple((float(x), float(y)) for x, y in points))


def _require_canvas(proj: Projection2D) -> int:
    if proj.canvas is None:
        raise NotNormalized("projection must be normalized to a canvas first")
    return proj.canvas.size


def to_keypoint_conditioning(proj: Projection2D) -> KeypointConditioning:
    size = _require_canvas(proj)
    points = tuple(
        (min(max(x / size, 0.0), 1.0), min(max(y / size, 0.0), 1.0))
        for x, y in (proj[j] for j in JointId)
    )
    return KeypointConditioning(points)


def to_openpose18(proj: Projection2D) -> list[tuple[float, float]]:
    """Map the 17 COCO points to body-18 order, synthesizing the Neck."""
    _require_canvas(proj)
    points: list[tuple[float, float]] = [(0.0, 0.0)] * 18
    for joint, index in _COCO_TO_OPENPOSE18.items():
        points[index] = proj[joint]
    ls, rs = proj[JointId.LeftShoulder], proj[JointId.RightShoulder]
    points[NECK_INDEX] = ((ls[0] + rs[0]) / 2, (ls[1] + rs[1]) / 2)
    return points


def render_skeleton(proj: Projection2D, style: SkeletonStyle | None = None) -> bytes:
    """Deterministic skeleton raster: colored limb capsules, then joint discs."""
    style = style or SkeletonStyle()
    points = to_openpose18(proj)
    canvas = Canvas(style.canvas_size, style.canvas_size, style.background)
    for limb_index, (a, b) in enumerate(style.limbs):
        (x0, y0), (x1, y1) = points[a], points[b]
        canvas.fill_capsule(x0, y0, x1, y1, style.limb_thickness / 2, style.colors[limb_index % 18])
    for index, (x, y) in enumerate(points):
        canvas.fill_disc(x, y, style.joint_radius, style.colors[index])
    return canvas.to_png()
