"""Pipeline state machine with full per-run provenance.

One run: keypoint generation -> keypoint feedback rounds -> advisory
validation -> projection -> conditioning artifact -> image generation ->
image feedback rounds. Every prompt sent, reply received, pose revision,
candidate variance, and generation digest lands in the RunRecord, which is
persisted even on failure.
"""

from __future__ import annotations

import hashlib
import json
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .backend import Backend, GenRequest, GenResult, stub_backend
from .client import ChatRequest, ImagePart, LlmClient, LlmConfig
from .errors import ParseError, PointT2IError
from .pose import (
    DEFAULT_GROUND_EPS,
    Pose3D,
    ProportionSpec,
    validate_ground_contact,
    validate_proportions,
)
from .projection import Projection2D, normalize_to_canvas, project_all
from .protocol import (
    TEMPLATE_VERSION,
    PoseAnalysis,
    Verdict,
    build_image_feedback_prompt,
    build_keypoint_feedback_prompt,
    build_keypoint_prompt,
    parse_analysis,
    parse_image_verdict,
    parse_keypoint_verdict,
)
from .render import SkeletonStyle, render_skeleton, to_keypoint_conditioning

FORMAT_REMINDER = "Ensure adherence to the above output format."

STATUS_VERIFIED = "Verified"
STATUS_UNVERIFIED = "Unverified"
STATUS_FAILED = "Failed"


@dataclass
class PipelineConfig:
    llm: LlmConfig = field(default_factory=LlmConfig)
    backend: str = "stub"
    kp_feedback_rounds: int = 3
    img_feedback_rounds: int = 3
    proportions: ProportionSpec = field(default_factory=ProportionSpec)
    ground_eps: float = DEFAULT_GROUND_EPS
    canvas_px: int = 512
    margin_frac: float = 0.1
    style: SkeletonStyle = field(default_factory=SkeletonStyle)
    conditioning: str = "skeleton"  # "skeleton" | "keypoints"
    early_exit_on_yes: bool = True
    seed: int = 0
    run_root: Path = field(default_factory=lambda: Path("runs"))
    strict: bool = False

    def __post_init__(self) -> None:
        if self.kp_feedback_rounds < 0 or self.img_feedback_rounds < 0:
            raise ValueError("feedback round counts must be >= 0")
        if self.conditioning not in ("skeleton", "keypoints"):
            raise ValueError(f"unknown conditioning kind {self.conditioning!r}")


@dataclass
class RunRecord:
    run_id: str
    prompt: str
    template_version: str = TEMPLATE_VERSION
    events: list[dict] = field(default_factory=list)
    status: str = STATUS_UNVERIFIED
    status_reason: str = ""

    def log(self, stage: str, kind: str, **payload) -> None:
        self.events.append({"stage": stage, "kind": kind, **payload})

    def log_llm(self, stage: str, prompt_text: str, reply_text: str, model: str) -> None:
        self.log(stage, "llm_exchange", model=model, prompt=prompt_text, reply=reply_text)

    def llm_exchanges(self, stage: str | None = None) -> list[dict]:
        return [
            e for e in self.events
            if e["kind"] == "llm_exchange" and (stage is None or e["stage"] == stage)
        ]

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "prompt": self.prompt,
            "template_version": self.template_version,
            "status": self.status,
            "status_reason": self.status_reason,
            "events": self.events,
        }

    def save(self, path: Path) -> None:
        # Atomic publish: readers never observe a half-written record.
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1))
        tmp.replace(path)


def _complete_parsed(client: LlmClient, model: str, prompt_text: str, parser, record: RunRecord,
                     stage: str, image: ImagePart | None = None):
    """One LLM call parsed by `parser`; a malformed reply earns one re-ask."""
    def call(text: str):
        if image is None:
            request = ChatRequest.text_only(model, text, client.config.temperature)
        else:
            request = ChatRequest.with_image(model, text, image, client.config.temperature)
        reply = client.complete(request)
        record.log_llm(stage, text, reply.text, model)
        return reply

    reply = call(prompt_text)
    try:
        return parser(reply.text)
    except ParseError as first:
        record.log(stage, "reask", error=str(first))
        reply = call(f"{prompt_text}\n{FORMAT_REMINDER}")
        return parser(reply.text)


def run_keypoint_stage(prompt: str, cfg: PipelineConfig, client: LlmClient,
                       record: RunRecord) -> PoseAnalysis:
    """Generate keypoints, then judge/revise them for up to kp_feedback_rounds."""
    stage = "keypoints"
    current: PoseAnalysis = _complete_parsed(
        client, cfg.llm.keypoint_model, build_keypoint_prompt(prompt),
        parse_analysis, record, stage,
    )
    record.log(stage, "pose", round=0, pose=current.pose.to_dict())

    for round_index in range(1, cfg.kp_feedback_rounds + 1):
        feedback_prompt = build_keypoint_feedback_prompt(prompt, current)
        verdict: Verdict = _complete_parsed(
            client, cfg.llm.keypoint_feedback_model, feedback_prompt,
            parse_keypoint_verdict, record, stage,
        )
        record.log(stage, "verdict", round=round_index, answer=verdict.answer, reason=verdict.reason)
        if verdict.answer:
            if cfg.early_exit_on_yes:
                break
        elif verdict.revised is not None:
            current = verdict.revised
            record.log(stage, "pose", round=round_index, pose=current.pose.to_dict())

    ground = validate_ground_contact(current.pose, cfg.ground_eps)
    proportions = validate_proportions(current.pose, cfg.proportions)
    record.log(stage, "validation", ground=ground.to_dict(), proportions=proportions.to_dict())
    if cfg.strict and not (ground.ok and proportions.ok):
        raise PointT2IError("strict mode: pose failed geometric validation")
    return current


def _derive_guidance(pose: Pose3D, cfg: PipelineConfig, record: RunRecord) -> tuple[Projection2D, GenRequest]:
    candidates = project_all(pose)
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.variance > best.variance:
            best = cand
    record.log("projection", "candidates",
               variances=[c.variance for c in candidates], selected_theta=best.theta)
    normalized = normalize_to_canvas(best, cfg.canvas_px, cfg.margin_frac)

    if cfg.conditioning == "skeleton":
        request = GenRequest(prompt=record.prompt, seed=cfg.seed,
                             width=cfg.canvas_px, height=cfg.canvas_px,
                             skeleton_png=render_skeleton(normalized, cfg.style))
    else:
        request = GenRequest(prompt=record.prompt, seed=cfg.seed,
                             width=cfg.canvas_px, height=cfg.canvas_px,
                             keypoints=to_keypoint_conditioning(normalized))
    return normalized, request


def run_image_stage(prompt: str, guidance: GenRequest, cfg: PipelineConfig, backend: Backend,
                    client: LlmClient, record: RunRecord) -> GenResult:
    """Generate, then judge with the vision LLM; a No regenerates with seed + 1."""
    stage = "image"

    def generate(req: GenRequest) -> GenResult:
        result = backend.generate(req)
        record.log(stage, "generation", request=req.digest(),
                   backend=result.backend_id, seed=result.seed,
                   image_sha256=hashlib.sha256(result.image_png).hexdigest())
        return result

    request = guidance
    result = generate(request)

    if cfg.img_feedback_rounds == 0:
        record.status = STATUS_UNVERIFIED
        record.status_reason = "feedback disabled"
        return result

    last_answer = False
    for round_index in range(1, cfg.img_feedback_rounds + 1):
        verdict: Verdict = _complete_parsed(
            client, cfg.llm.image_feedback_model, build_image_feedback_prompt(prompt),
            parse_image_verdict, record, stage,
            image=ImagePart.from_png(result.image_png),
        )
        record.log(stage, "verdict", round=round_index, answer=verdict.answer, reason=verdict.reason)
        last_answer = verdict.answer
        if verdict.answer:
            if cfg.early_exit_on_yes:
                break
        else:
            request = GenRequest(prompt=request.prompt, seed=request.seed + 1,
                                 width=request.width, height=request.height,
                                 keypoints=request.keypoints, skeleton_png=request.skeleton_png,
                                 params=request.params)
            result = generate(request)

    if last_answer:
        record.status = STATUS_VERIFIED
        record.status_reason = ""
    else:
        record.status = STATUS_UNVERIFIED
        record.status_reason = "image feedback exhausted"
    return result


def _make_backend(cfg: PipelineConfig) -> Backend:
    if cfg.backend == "stub":
        return stub_backend()
    from .backend import HttpBackend

    return HttpBackend(cfg.backend)


def run_pipeline(prompt: str, cfg: PipelineConfig, client: LlmClient,
                 backend: Backend | None = None, run_id: str | None = None) -> RunRecord:
    """Full pipeline for one prompt; the record and artifacts always persist."""
    run_id = run_id or uuid.uuid4().hex[:12]
    record = RunRecord(run_id=run_id, prompt=prompt)
    run_dir = cfg.run_root / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    backend = backend if backend is not None else _make_backend(cfg)

    try:
        analysis = run_keypoint_stage(prompt, cfg, client, record)
        pose_rounds = [e for e in record.events if e["kind"] == "pose"]
        for entry in pose_rounds:
            (run_dir / f"pose_round_{entry['round']}.json").write_text(
                json.dumps(entry["pose"], sort_keys=True))

        normalized, guidance = _derive_guidance(analysis.pose, cfg, record)
        normalized.save(run_dir / "projection.json")
        if guidance.skeleton_png is not None:
            (run_dir / "guidance.png").write_bytes(guidance.skeleton_png)
        else:
            (run_dir / "guidance.json").write_text(guidance.keypoints.to_json())

        result = run_image_stage(prompt, guidance, cfg, backend, client, record)
        generations = [e for e in record.events if e["kind"] == "generation"]
        (run_dir / f"image_round_{len(generations) - 1}.png").write_bytes(result.image_png)
    except PointT2IError as exc:
        record.status = STATUS_FAILED
        record.status_reason = f"{type(exc).__name__}: {exc}"
    finally:
        record.save(run_dir / "record.json")
    return record


def derive_seed(batch_seed: int, prompt_index: int) -> int:
    digest = hashlib.sha256(f"{batch_seed}:{prompt_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def run_batch(prompts: list[str], cfg: PipelineConfig, client: LlmClient,
              backend: Backend | None = None, parallelism: int = 4) -> list[dict]:
    """Run every prompt, bounded concurrency; manifest rows keep input order."""
    if not prompts:
        raise ValueError("prompts must be non-empty")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    backend = backend if backend is not None else _make_backend(cfg)

    def one(index_prompt: tuple[int, str]) -> dict:
        index, prompt = index_prompt
        run_cfg = PipelineConfig(**{**cfg.__dict__, "seed": derive_seed(cfg.seed, index)})
        run_id = f"run_{index:03d}_{uuid.uuid4().hex[:8]}"
        record = run_pipeline(prompt, run_cfg, client, backend, run_id=run_id)
        generations = [e for e in record.events if e["kind"] == "generation"]
        image = f"{run_id}/image_round_{len(generations) - 1}.png" if generations else ""
        return {"prompt": prompt, "run_id": run_id, "image": image,
                "status": record.status, "status_reason": record.status_reason}

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        rows = list(pool.map(one, enumerate(prompts)))

    cfg.run_root.mkdir(parents=True, exist_ok=True)
    manifest_path = cfg.run_root / "manifest.json"
    manifest_path.write_text(json.dumps(rows, sort_keys=True, indent=1))
    return rows
