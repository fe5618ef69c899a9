import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from pointt2i.errors import DegeneratePose, MissingJoint
from pointt2i.fixtures import standing_pose
from pointt2i.pose import (
    JOINT_ORDER,
    JointId,
    Pose3D,
    ProportionSpec,
    back_length,
    display_name,
    validate_ground_contact,
    validate_proportions,
)

from conftest import random_pose


class TestJointId:
    def test_seventeen_joints_in_canonical_order(self):
        assert len(JOINT_ORDER) == 17
        assert JOINT_ORDER[0] is JointId.Nose
        assert JOINT_ORDER[-1] is JointId.RightAnkle

    def test_display_names(self):
        assert display_name(JointId.Nose) == "Nose"
        assert display_name(JointId.LeftEye) == "Left Eye"
        assert display_name(JointId.RightShoulder) == "Right Shoulder"


class TestPose3D:
    def test_missing_joint_rejected(self, standing):
        joints = dict(standing.joints)
        del joints[JointId.RightAnkle]
        with pytest.raises(MissingJoint):
            Pose3D(joints)

    def test_non_finite_rejected(self, standing):
        joints = dict(standing.joints)
        joints[JointId.Nose] = (0.0, float("nan"), 1.0)
        with pytest.raises(ValueError):
            Pose3D(joints)

    def test_json_round_trip(self, standing):
        again = Pose3D.from_json(standing.to_json())
        for j in JOINT_ORDER:
            assert again[j] == standing[j]

    def test_from_dict_accepts_spaced_names(self):
        data = standing_pose().to_dict()
        spaced = {"joints": {display_name(JointId[k]): v for k, v in data["joints"].items()}}
        pose = Pose3D.from_dict(spaced)
        assert pose[JointId.LeftEye] == tuple(data["joints"]["LeftEye"])


class TestBackLength:
    def test_axis_aligned(self, standing):
        joints = dict(standing.joints)
        joints[JointId.LeftShoulder] = (0.0, 0.1, 1.5)
        joints[JointId.RightShoulder] = (0.0, -0.1, 1.5)
        joints[JointId.LeftHip] = (0.0, 0.1, 0.9)
        joints[JointId.RightHip] = (0.0, -0.1, 0.9)
        assert back_length(Pose3D(joints)) == pytest.approx(0.6)

    def test_all_at_origin_degenerate(self):
        pose = Pose3D({j: (0.0, 0.0, 0.0) for j in JOINT_ORDER})
        with pytest.raises(DegeneratePose):
            back_length(pose)

    def test_reference_pose_unit_back(self, standing):
        assert back_length(standing) == pytest.approx(1.0, abs=1e-12)

    def test_invariant_under_rigid_motion(self, standing):
        moved = standing.rotated_z(0.7).translated(3.0, -2.0, 5.0)
        assert back_length(moved) == pytest.approx(back_length(standing), abs=1e-9)


class TestGroundContact:
    def test_standing_ok(self, standing):
        assert validate_ground_contact(standing, 0.02).ok

    def test_no_contact_when_floating(self, standing):
        floating = standing.translated(0, 0, 0.5)
        report = validate_ground_contact(floating, 0.02)
        assert not report.ok
        assert [v.kind for v in report.violations] == ["NoContact"]

    def test_below_ground_wrist(self, standing):
        joints = dict(standing.joints)
        x, y, _ = joints[JointId.LeftWrist]
        joints[JointId.LeftWrist] = (x, y, -0.2)
        report = validate_ground_contact(Pose3D(joints), 0.02)
        kinds = {(v.kind, v.subject) for v in report.violations}
        assert ("BelowGround", "LeftWrist") in kinds

    def test_invariant_under_z_rotation_and_xy_translation(self, standing):
        moved = standing.rotated_z(1.1).translated(4.0, -7.0, 0.0)
        assert validate_ground_contact(moved, 0.02).ok
        floating = standing.translated(0, 0, 1.0)
        moved_floating = floating.rotated_z(2.2).translated(-1.0, 3.0, 0.0)
        a = validate_ground_contact(floating, 0.02)
        b = validate_ground_contact(moved_floating, 0.02)
        assert [v.kind for v in a.violations] == [v.kind for v in b.violations]


class TestProportions:
    def test_reference_pose_passes(self, standing):
        assert validate_proportions(standing).ok

    def test_single_segment_violation(self, standing):
        joints = dict(standing.joints)
        hip = joints[JointId.LeftHip]
        knee = joints[JointId.LeftKnee]
        # stretch hip->knee to 0.9 * L, dragging the ankle to keep the lower leg intact
        direction = tuple(k - h for k, h in zip(knee, hip))
        length = math.dist(hip, knee)
        new_knee = tuple(h + d * 0.9 / length for h, d in zip(hip, direction))
        delta = tuple(n - k for n, k in zip(new_knee, knee))
        joints[JointId.LeftKnee] = new_knee
        joints[JointId.LeftAnkle] = tuple(a + d for a, d in zip(joints[JointId.LeftAnkle], delta))
        report = validate_proportions(Pose3D(joints))
        assert len(report.violations) == 1
        v = report.violations[0]
        assert v.kind == "UpperLeg-Left"
        assert v.measured == pytest.approx(0.9, abs=1e-9)
        assert v.expected == pytest.approx(0.6)

    def test_paper_default_ratios(self):
        spec = ProportionSpec()
        assert (spec.upper_leg_ratio, spec.lower_leg_ratio) == (0.6, 0.7)
        assert (spec.upper_arm_ratio, spec.lower_arm_ratio) == (0.3, 0.3)
        assert spec.shoulder_mid_to_nose_ratio == 0.2

    def test_hip_spread_violation(self, standing):
        joints = dict(standing.joints)
        joints[JointId.LeftHip] = (0.0, 0.25, joints[JointId.LeftHip][2])
        joints[JointId.RightHip] = (0.0, -0.25, joints[JointId.RightHip][2])
        report = validate_proportions(Pose3D(joints))
        assert any(v.kind == "HipSpread" for v in report.violations)

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            ProportionSpec(upper_leg_ratio=0)
        with pytest.raises(ValueError):
            ProportionSpec(tolerance=1.5)


ratio_strategy = st.floats(min_value=0.2, max_value=1.2)


@given(
    upper_leg=ratio_strategy,
    lower_leg=ratio_strategy,
    upper_arm=ratio_strategy,
    lower_arm=ratio_strategy,
    nose=ratio_strategy,
    tolerance=st.floats(min_value=0.05, max_value=0.4),
    inside=st.booleans(),
)
@settings(max_examples=60, deadline=None)
def test_proportion_tolerance_boundary(upper_leg, lower_leg, upper_arm, lower_arm, nose,
                                       tolerance, inside):
    """Perturbations within tolerance pass, beyond tolerance fail."""
    spec = ProportionSpec(
        upper_leg_ratio=upper_leg,
        lower_leg_ratio=lower_leg,
        upper_arm_ratio=upper_arm,
        lower_arm_ratio=lower_arm,
        shoulder_mid_to_nose_ratio=nose,
        tolerance=tolerance,
    )
    pose = standing_pose(spec)
    factor = 1 + (0.5 if inside else 2.0) * tolerance
    joints = dict(pose.joints)
    hip = joints[JointId.RightHip]
    knee = joints[JointId.RightKnee]
    new_knee = tuple(h + (k - h) * factor for h, k in zip(hip, knee))
    delta = tuple(n - k for n, k in zip(new_knee, knee))
    joints[JointId.RightKnee] = new_knee
    joints[JointId.RightAnkle] = tuple(a + d for a, d in zip(joints[JointId.RightAnkle], delta))
    report = validate_proportions(Pose3D(joints), spec)
    if inside:
        assert report.ok
    else:
        assert any(v.kind == "UpperLeg-Right" for v in report.violations)


@given(seed=st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_serialization_round_trip_random_poses(seed):
    pose = random_pose(random.Random(seed))
    again = Pose3D.from_json(pose.to_json())
    for j in JOINT_ORDER:
        assert again[j] == pose[j]
