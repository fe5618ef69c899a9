"""Analytic reference poses built exactly from a ProportionSpec.

Used as test oracles and as the canonical render fixture: every constrained
segment has its exact target length, ankles sit on the ground plane.
"""

from __future__ import annotations

from .pose import JointId, Pose3D, ProportionSpec


def standing_pose(spec: ProportionSpec | None = None, back: float = 1.0) -> Pose3D:
    """Upright stance with arms hanging; back length exactly `back`."""
    return _build(spec or ProportionSpec(), back, arms_out=False)


def t_pose(spec: ProportionSpec | None = None, back: float = 1.0) -> Pose3D:
    """Upright stance with arms horizontal; the golden-image fixture."""
    return _build(spec or ProportionSpec(), back, arms_out=True)


def _build(spec: ProportionSpec, back: float, arms_out: bool) -> Pose3D:
    hip_half = 0.05 * back
    shoulder_half = 0.15 * back
    hip_z = (spec.upper_leg_ratio + spec.lower_leg_ratio) * back
    shoulder_z = hip_z + back
    nose_z = shoulder_z + spec.shoulder_mid_to_nose_ratio * back

    ua = spec.upper_arm_ratio * back
    la = spec.lower_arm_ratio * back
    if arms_out:
        elbow = lambda s: (0.0, s * (shoulder_half + ua), shoulder_z)
        wrist = lambda s: (0.0, s * (shoulder_half + ua + la), shoulder_z)
    else:
        elbow = lambda s: (0.0, s * shoulder_half, shoulder_z - ua)
        wrist = lambda s: (0.0, s * shoulder_half, shoulder_z - ua - la)

    joints = {
        JointId.Nose: (0.0, 0.0, nose_z),
        # Head periphery is unconstrained by the proportion rules; the small
        # x offset keeps the pose out of a single plane.
        JointId.LeftEye: (0.04 * back, 0.03 * back, nose_z + 0.02 * back),
        JointId.RightEye: (0.04 * back, -0.03 * back, nose_z + 0.02 * back),
        JointId.LeftEar: (0.0, 0.06 * back, nose_z),
        JointId.RightEar: (0.0, -0.06 * back, nose_z),
        JointId.LeftShoulder: (0.0, shoulder_half, shoulder_z),
        JointId.RightShoulder: (0.0, -shoulder_half, shoulder_z),
        JointId.LeftElbow: elbow(1),
        JointId.RightElbow: elbow(-1),
        JointId.LeftWrist: wrist(1),
        JointId.RightWrist: wrist(-1),
        JointId.LeftHip: (0.0, hip_half, hip_z),
        JointId.RightHip: (0.0, -hip_half, hip_z),
        JointId.LeftKnee: (0.0, hip_half, hip_z - spec.upper_leg_ratio * back),
        JointId.RightKnee: (0.0, -hip_half, hip_z - spec.upper_leg_ratio * back),
        JointId.LeftAnkle: (0.0, hip_half, 0.0),
        JointId.RightAnkle: (0.0, -hip_half, 0.0),
    }
    return Pose3D(joints)
