"""3D human pose domain types and deterministic structural validation.

Poses use the 17-joint COCO convention with z = 0 as the ground plane.
Validation never repairs a pose; it only reports violations. Repair is the
job of the keypoint-feedback loop.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DegeneratePose, MissingJoint

Vec3 = tuple[float, float, float]


class JointId(enum.IntEnum):
    """The 17 COCO body joints, in canonical serialization order."""

    Nose = 0
    LeftEye = 1
    RightEye = 2
    LeftEar = 3
    RightEar = 4
    LeftShoulder = 5
    RightShoulder = 6
    LeftElbow = 7
    RightElbow = 8
    LeftWrist = 9
    RightWrist = 10
    LeftHip = 11
    RightHip = 12
    LeftKnee = 13
    RightKnee = 14
    LeftAnkle = 15
    RightAnkle = 16


JOINT_ORDER: tuple[JointId, ...] = tuple(JointId)

_CAMEL_SPLIT = re.compile(r"(?<=[a-z])(?=[A-Z])")


def display_name(joint: JointId) -> str:
    """'LeftEye' -> 'Left Eye', matching the prompt-template spelling."""
    return _CAMEL_SPLIT.sub(" ", joint.name)


def canonical_joint(name: str) -> JointId | None:
    """Resolve a joint name leniently (case, spaces, underscores)."""
    key = name.replace(" ", "").replace("_", "").lower()
    return _JOINT_LOOKUP.get(key)


_JOINT_LOOKUP = {j.name.lower(): j for j in JointId}


def _midpoint(a: Vec3, b: Vec3) -> Vec3:
    return ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2)


def _dist(a: Vec3, b: Vec3) -> float:
    return math.dist(a, b)


@dataclass(frozen=True)
class Pose3D:
    """All 17 joints with finite 3D coordinates."""

    joints: Mapping[JointId, Vec3]

    def __post_init__(self) -> None:
        for j in JOINT_ORDER:
            if j not in self.joints:
                raise MissingJoint(j.name)
        for j, p in self.joints.items():
            if len(p) != 3 or not all(math.isfinite(c) for c in p):
                raise ValueError(f"non-finite coordinate for {JointId(j).name}: {p}")

    def __getitem__(self, joint: JointId) -> Vec3:
        return self.joints[joint]

    def transformed(self, fn) -> "Pose3D":
        """New pose with fn applied to every joint coordinate."""
        return Pose3D({j: tuple(fn(p)) for j, p in self.joints.items()})

    def translated(self, dx: float, dy: float, dz: float) -> "Pose3D":
        return self.transformed(lambda p: (p[0] + dx, p[1] + dy, p[2] + dz))

    def rotated_z(self, angle: float) -> "Pose3D":
        c, s = math.cos(angle), math.sin(angle)
        return self.transformed(lambda p: (c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]))

    def scaled(self, factor: float) -> "Pose3D":
        return self.transformed(lambda p: (p[0] * factor, p[1] * factor, p[2] * factor))

    # --- serialization (CLI file format) ---

    def to_dict(self) -> dict:
        return {"joints": {j.name: list(self.joints[j]) for j in JOINT_ORDER}}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Pose3D":
        raw = data.get("joints", {})
        joints: dict[JointId, Vec3] = {}
        for name, coords in raw.items():
            j = canonical_joint(str(name))
            if j is None:
                raise MissingJoint(str(name))
            joints[j] = tuple(float(c) for c in coords)
        return cls(joints)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Pose3D":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "Pose3D":
        return cls.from_json(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


DEFAULT_GROUND_EPS = 0.02


@dataclass(frozen=True)
class ProportionSpec:
    """Limb-length ratios relative to the back length (shoulder-mid to hip-mid)."""

    upper_leg_ratio: float = 0.6
    lower_leg_ratio: float = 0.7
    upper_arm_ratio: float = 0.3
    lower_arm_ratio: float = 0.3
    shoulder_mid_to_nose_ratio: float = 0.2
    tolerance: float = 0.15

    def __post_init__(self) -> None:
        ratios = (
            self.upper_leg_ratio,
            self.lower_leg_ratio,
            self.upper_arm_ratio,
            self.lower_arm_ratio,
            self.shoulder_mid_to_nose_ratio,
        )
        if any(r <= 0 for r in ratios):
            raise ValueError("proportion ratios must be positive")
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must be in (0, 1)")


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    measured: float
    expected: float


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "subject": v.subject, "measured": v.measured, "expected": v.expected}
                for v in self.violations
            ],
        }


def back_length(pose: Pose3D) -> float:
    """Distance between the shoulder midpoint and the hip midpoint."""
    sm = _midpoint(pose[JointId.LeftShoulder], pose[JointId.RightShoulder])
    hm = _midpoint(pose[JointId.LeftHip], pose[JointId.RightHip])
    length = _dist(sm, hm)
    if length < 1e-9:
        raise DegeneratePose("shoulder and hip midpoints coincide")
    return length


def validate_ground_contact(pose: Pose3D, ground_eps: float = DEFAULT_GROUND_EPS) -> ValidationReport:
    """Check that no joint sinks below ground and at least one touches it.

    Joints with |z| <= ground_eps count as contact ("special") points.
    """
    if ground_eps < 0:
        raise ValueError("ground_eps must be >= 0")
    report = ValidationReport()
    contact = False
    for j in JOINT_ORDER:
        z = pose[j][2]
        if z < -ground_eps:
            report.violations.append(Violation("BelowGround", j.name, z, 0.0))
        elif abs(z) <= ground_eps:
            contact = True
    if not contact:
        lowest = min(JOINT_ORDER, key=lambda j: pose[j][2])
        report.violations.append(Violation("NoContact", lowest.name, pose[lowest][2], 0.0))
    return report


# (kind, endpoint A, endpoint B, ratio attribute)
_SEGMENTS = (
    ("UpperLeg-Left", JointId.LeftHip, JointId.LeftKnee, "upper_leg_ratio"),
    ("UpperLeg-Right", JointId.RightHip, JointId.RightKnee, "upper_leg_ratio"),
    ("LowerLeg-Left", JointId.LeftKnee, JointId.LeftAnkle, "lower_leg_ratio"),
    ("LowerLeg-Right", JointId.RightKnee, JointId.RightAnkle, "lower_leg_ratio"),
    ("UpperArm-Left", JointId.LeftShoulder, JointId.LeftElbow, "upper_arm_ratio"),
    ("UpperArm-Right", JointId.RightShoulder, JointId.RightElbow, "upper_arm_ratio"),
    ("LowerArm-Left", JointId.LeftElbow, JointId.LeftWrist, "lower_arm_ratio"),
    ("LowerArm-Right", JointId.RightElbow, JointId.RightWrist, "lower_arm_ratio"),
)

HIP_SPREAD_MAX_RATIO = 0.3


def validate_proportions(pose: Pose3D, spec: ProportionSpec | None = None) -> ValidationReport:
    """Check the 8 limb segments and the shoulder-mid-to-nose distance against spec ratios.

    A segment violates when |measured/L - ratio| > tolerance * ratio, with L the
    back length. Inter-hip distance beyond HIP_SPREAD_MAX_RATIO * L is reported
    as HipSpread.
    """
    spec = spec or ProportionSpec()
    length = back_length(pose)
    report = ValidationReport()

    def check(kind: str, measured: float, ratio: float) -> None:
        if abs(measured / length - ratio) > spec.tolerance * ratio:
            report.violations.append(Violation(kind, kind, measured / length, ratio))

    for kind, a, b, attr in _SEGMENTS:
        check(kind, _dist(pose[a], pose[b]), getattr(spec, attr))

    sm = _midpoint(pose[JointId.LeftShoulder], pose[JointId.RightShoulder])
    check("ShoulderMidToNose", _dist(sm, pose[JointId.Nose]), spec.shoulder_mid_to_nose_ratio)

    hip_spread = _dist(pose[JointId.LeftHip], pose[JointId.RightHip])
    if hip_spread > HIP_SPREAD_MAX_RATIO * length:
        report.violations.append(
            Violation("HipSpread", "LeftHip-RightHip", hip_spread / length, HIP_SPREAD_MAX_RATIO)
        )
    return report


SEGMENT_KINDS: tuple[str, ...] = tuple(s[0] for s in _SEGMENTS) + ("ShoulderMidToNose",)
