"""Command-line surface over the library.

Option precedence: CLI flag > config file (`pointt2i.json` or --config) >
built-in default. Exit codes: 0 ok, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from .backend import stub_backend
from .client import KindDispatchTransport, LlmClient, LlmConfig
from .errors import PointT2IError
from .pipeline import PipelineConfig, run_batch, run_keypoint_stage, run_pipeline, RunRecord
from .pose import Pose3D, ProportionSpec, validate_ground_contact, validate_proportions
from .projection import Projection2D, normalize_to_canvas, project_all, select_projection
from .render import render_skeleton, to_keypoint_conditioning

DEFAULT_CONFIG_FILE = "pointt2i.json"

_DEFAULTS = {
    "endpoint": "https://api.openai.com/v1",
    "keypoint_model": "o1-preview",
    "keypoint_feedback_model": "o1-preview",
    "image_feedback_model": "gpt-4o",
    "backend": "stub",
    "kp_rounds": 3,
    "img_rounds": 3,
    "canvas": 512,
    "margin": 0.1,
    "ground_eps": 0.02,
    "conditioning": "skeleton",
    "seed": 0,
    "out": "runs",
    "parallelism": 4,
    "early_exit": True,
    "strict": False,
}


class Settings:
    """Three-layer option resolution: flag > config file > default."""

    def __init__(self, config_path: str | None):
        self.file_values: dict = {}
        path = Path(config_path) if config_path else Path(DEFAULT_CONFIG_FILE)
        if path.exists():
            try:
                self.file_values = json.loads(path.read_text())
            except ValueError as exc:
                raise click.UsageError(f"bad config file {path}: {exc}")
        elif config_path:
            raise click.UsageError(f"config file not found: {config_path}")

    def get(self, key: str, flag_value=None):
        if flag_value is not None:
            return flag_value
        if key in self.file_values:
            return self.file_values[key]
        return _DEFAULTS[key]


def _llm_client(settings: Settings, llm_flag: str | None) -> LlmClient:
    spec = settings.get("endpoint", llm_flag)
    config = LlmConfig(
        endpoint=spec if not str(spec).startswith("mock:") else "mock://",
        keypoint_model=settings.get("keypoint_model"),
        keypoint_feedback_model=settings.get("keypoint_feedback_model"),
        image_feedback_model=settings.get("image_feedback_model"),
    )
    if str(spec).startswith("mock:"):
        script_path = Path(str(spec)[len("mock:"):])
        if not script_path.exists():
            raise click.UsageError(f"mock script not found: {script_path}")
        replies = json.loads(script_path.read_text())
        return LlmClient(config, transport=KindDispatchTransport(replies), sleep=lambda _t: None)
    return LlmClient(config)


def _pipeline_config(settings: Settings, **flags) -> PipelineConfig:
    return PipelineConfig(
        backend=str(settings.get("backend", flags.get("backend"))),
        kp_feedback_rounds=int(settings.get("kp_rounds", flags.get("kp_rounds"))),
        img_feedback_rounds=int(settings.get("img_rounds", flags.get("img_rounds"))),
        canvas_px=int(settings.get("canvas", flags.get("canvas"))),
        margin_frac=float(settings.get("margin", flags.get("margin"))),
        ground_eps=float(settings.get("ground_eps", flags.get("ground_eps"))),
        conditioning=str(settings.get("conditioning", flags.get("conditioning"))),
        seed=int(settings.get("seed", flags.get("seed"))),
        run_root=Path(str(settings.get("out", flags.get("out")))),
        early_exit_on_yes=bool(settings.get("early_exit", flags.get("early_exit"))),
        strict=bool(settings.get("strict", flags.get("strict") or None)),
    )


@click.group()
@click.option("--config", "config_path", type=str, default=None, help="Config file (JSON).")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None) -> None:
    """Prompt-to-pose-to-image pipeline: LLM keypoints, 2D guidance, feedback loops."""
    ctx.obj = Settings(config_path)


@cli.command()
@click.argument("prompt")
@click.option("--rounds", type=int, default=None, help="Keypoint feedback rounds.")
@click.option("--llm", type=str, default=None, help="Endpoint URL or mock:<script.json>.")
@click.option("-o", "--output", type=click.Path(), default=None, help="Pose JSON output file.")
@click.pass_obj
def keypoints(settings: Settings, prompt: str, rounds: int | None, llm: str | None,
              output: str | None) -> None:
    """Generate a 3D pose for PROMPT via the LLM keypoint stage."""
    client = _llm_client(settings, llm)
    cfg = _pipeline_config(settings, kp_rounds=rounds)
    cfg.llm = client.config
    record = RunRecord(run_id="cli", prompt=prompt)
    analysis = run_keypoint_stage(prompt, cfg, client, record)
    text = analysis.pose.to_json()
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text)


@cli.command()
@click.argument("pose_file", type=click.Path(exists=True))
@click.option("--eps", type=float, default=None, help="Ground-contact tolerance.")
@click.pass_obj
def validate(settings: Settings, pose_file: str, eps: float | None) -> None:
    """Validate ground contact and body proportions of a pose file."""
    pose = Pose3D.load(pose_file)
    ground = validate_ground_contact(pose, float(settings.get("ground_eps", eps)))
    proportions = validate_proportions(pose, ProportionSpec())
    report = {"ground": ground.to_dict(), "proportions": proportions.to_dict()}
    click.echo(json.dumps(report, sort_keys=True, indent=1))
    if not (ground.ok and proportions.ok):
        sys.exit(2)


@cli.command()
@click.argument("pose_file", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), default="projection.json")
@click.option("--canvas", type=int, default=None)
@click.option("--margin", type=float, default=None)
@click.pass_obj
def project(settings: Settings, pose_file: str, output: str, canvas: int | None,
            margin: float | None) -> None:
    """Select the max-variance projection of a pose and normalize to canvas."""
    pose = Pose3D.load(pose_file)
    candidates = project_all(pose)
    best = select_projection(pose)
    normalized = normalize_to_canvas(
        best, int(settings.get("canvas", canvas)), float(settings.get("margin", margin)))
    normalized.save(output)
    click.echo(json.dumps(
        {"theta": best.theta, "variances": [c.variance for c in candidates], "output": output},
        sort_keys=True))


@cli.command()
@click.argument("projection_file", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["skeleton", "keypoints"]), default="skeleton")
@click.option("-o", "--output", type=click.Path(), default=None)
def render(projection_file: str, fmt: str, output: str | None) -> None:
    """Render conditioning guidance from a normalized projection file."""
    proj = Projection2D.load(projection_file)
    if fmt == "skeleton":
        out = Path(output or "guidance.png")
        out.write_bytes(render_skeleton(proj))
    else:
        out = Path(output or "guidance.json")
        out.write_text(to_keypoint_conditioning(proj).to_json())
    click.echo(str(out))


@cli.command()
@click.option("--prompt", type=str, default=None)
@click.option("--corpus", "corpus_name", type=str, default=None)
@click.option("--backend", type=str, default=None, help="'stub' or a generator base URL.")
@click.option("--llm", type=str, default=None, help="Endpoint URL or mock:<script.json>.")
@click.option("--kp-rounds", type=int, default=None)
@click.option("--img-rounds", type=int, default=None)
@click.option("--conditioning", type=click.Choice(["skeleton", "keypoints"]), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="Run directory root.")
@click.option("--parallelism", type=int, default=None)
@click.option("--strict", is_flag=True, default=False)
@click.pass_obj
def generate(settings: Settings, prompt: str | None, corpus_name: str | None, backend: str | None,
             llm: str | None, kp_rounds: int | None, img_rounds: int | None,
             conditioning: str | None, seed: int | None, out: str | None,
             parallelism: int | None, strict: bool) -> None:
    """Run the full pipeline for one prompt or a whole corpus."""
    if (prompt is None) == (corpus_name is None):
        raise click.UsageError("provide exactly one of --prompt or --corpus")
    if corpus_name is not None and corpus_name not in corpus_mod.CORPORA:
        raise click.UsageError(
            f"unknown corpus {corpus_name!r}; available: {', '.join(sorted(corpus_mod.CORPORA))}")

    client = _llm_client(settings, llm)
    cfg = _pipeline_config(settings, backend=backend, kp_rounds=kp_rounds, img_rounds=img_rounds,
                           conditioning=conditioning, seed=seed, out=out, strict=strict)
    cfg.llm = client.config
    backend_handle = stub_backend() if cfg.backend == "stub" else None

    if prompt is not None:
        record = run_pipeline(prompt, cfg, client, backend_handle)
        click.echo(json.dumps({"run_id": record.run_id, "status": record.status,
                               "reason": record.status_reason}, sort_keys=True))
        if record.status == "Failed":
            sys.exit(2)
    else:
        prompts = corpus_mod.CORPORA[corpus_name].prompts
        rows = run_batch(prompts, cfg, client, backend_handle,
                         parallelism=int(settings.get("parallelism", parallelism)))
        click.echo(json.dumps(rows, sort_keys=True, indent=1))
        if any(r["status"] == "Failed" for r in rows):
            sys.exit(2)


@cli.group()
def corpus() -> None:
    """Inspect the built-in prompt corpora."""


@corpus.command("list")
def corpus_list() -> None:
    for name in sorted(corpus_mod.CORPORA):
        c = corpus_mod.CORPORA[name]
        click.echo(f"{name} ({len(c.entries)} prompts)")
        for label, prompt in c.entries:
            click.echo(f"  {label}: {prompt}")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except PointT2IError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
