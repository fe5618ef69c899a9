"""Prompt-to-pose-to-image pipeline.

An LLM infers 3D human pose keypoints from a text prompt; the pose is
validated, projected to the max-variance 2D view, rendered as conditioning
guidance, and handed to an image generator. Two LLM feedback loops refine
the keypoints and the generated image.
"""

from .errors import PointT2IError
from .pose import JointId, Pose3D, ProportionSpec, back_length, validate_ground_contact, validate_proportions
from .projection import Projection2D, normalize_to_canvas, project, select_projection, total_variance
from .protocol import (
    PoseAnalysis,
    Verdict,
    build_image_feedback_prompt,
    build_keypoint_feedback_prompt,
    build_keypoint_prompt,
    parse_analysis,
    parse_image_verdict,
    parse_keypoint_verdict,
)
from .render import KeypointConditioning, SkeletonStyle, render_skeleton, to_keypoint_conditioning, to_openpose18
from .backend import GenRequest, GenResult, stub_backend
from .client import ChatRequest, LlmClient, LlmConfig, mock_transport
from .pipeline import PipelineConfig, RunRecord, run_batch, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "PointT2IError",
    "JointId", "Pose3D", "ProportionSpec", "back_length",
    "validate_ground_contact", "validate_proportions",
    "Projection2D", "normalize_to_canvas", "project", "select_projection", "total_variance",
    "PoseAnalysis", "Verdict",
    "build_keypoint_prompt", "build_keypoint_feedback_prompt", "build_image_feedback_prompt",
    "parse_analysis", "parse_keypoint_verdict", "parse_image_verdict",
    "KeypointConditioning", "SkeletonStyle", "render_skeleton",
    "to_keypoint_conditioning", "to_openpose18",
    "GenRequest", "GenResult", "stub_backend",
    "ChatRequest", "LlmClient", "LlmConfig", "mock_transport",
    "PipelineConfig", "RunRecord", "run_batch", "run_pipeline",
]
