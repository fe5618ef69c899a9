"""Orthographic projection of a 3D pose onto eight candidate view planes.

View directions are v = (cos(k*pi/8), sin(k*pi/8), 0) for k in 0..7. The
screen basis is h = z_hat x v (horizontal) and z_hat (vertical), so poses are
never rendered tilted. The candidate with the largest total 2D coordinate
variance wins; ties break toward the smallest k for deterministic runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from .pose import JOINT_ORDER, JointId, Pose3D

N_DIRECTIONS = 8

Vec2 = tuple[float, float]


def direction_vector(theta: int) -> tuple[float, float, float]:
    if not 0 <= theta < N_DIRECTIONS:
        raise ValueError(f"theta must be in [0, {N_DIRECTIONS}), got {theta}")
    angle = theta * math.pi / N_DIRECTIONS
    return (math.cos(angle), math.sin(angle), 0.0)


@dataclass(frozen=True)
class CanvasSpec:
    size: int = 512
    margin: float = 0.1

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValueError("canvas size must be positive")
        if not 0 <= self.margin < 0.5:
            raise ValueError("margin must be in [0, 0.5)")


@dataclass(frozen=True)
class Projection2D:
    points: Mapping[JointId, Vec2]
    theta: int
    variance: float
    canvas: Optional[CanvasSpec] = None

    def __getitem__(self, joint: JointId) -> Vec2:
        return self.points[joint]

    def to_dict(self) -> dict:
        data: dict = {
            "theta": self.theta,
            "variance": self.variance,
            "points": {j.name: list(self.points[j]) for j in JOINT_ORDER},
        }
        if self.canvas is not None:
            data["canvas"] = {"size": self.canvas.size, "margin": self.canvas.margin}
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "Projection2D":
        canvas = None
        if data.get("canvas"):
            canvas = CanvasSpec(size=int(data["canvas"]["size"]), margin=float(data["canvas"]["margin"]))
        points = {JointId[name]: (float(p[0]), float(p[1])) for name, p in data["points"].items()}
        return cls(points=points, theta=int(data["theta"]), variance=float(data["variance"]), canvas=canvas)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "Projection2D":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def project(pose: Pose3D, theta: int) -> Projection2D:
    """Project along direction theta: (u, w) = (p . h, p . z_hat), h = z_hat x v."""
    vx, vy, _ = direction_vector(theta)
    hx, hy = -vy, vx  # z_hat x v
    points = {
        j: (pose[j][0] * hx + pose[j][1] * hy, pose[j][2])
        for j in JOINT_ORDER
    }
    proj = Projection2D(points=points, theta=theta, variance=0.0)
    return Projection2D(points=points, theta=theta, variance=total_variance(proj))


def total_variance(proj: Projection2D) -> float:
    """Var(u) + Var(w), population variance over the 17 joints."""
    us = [proj.points[j][0] for j in JOINT_ORDER]
    ws = [proj.points[j][1] for j in JOINT_ORDER]
    n = len(us)
    mu, mw = sum(us) / n, sum(ws) / n
    return sum((u - mu) ** 2 for u in us) / n + sum((w - mw) ** 2 for w in ws) / n


def project_all(pose: Pose3D) -> list[Projection2D]:
    return [project(pose, theta) for theta in range(N_DIRECTIONS)]


def select_projection(pose: Pose3D) -> Projection2D:
    """Highest-variance candidate; max() keeps the first (smallest theta) on ties."""
    candidates = project_all(pose)
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.variance > best.variance:
            best = cand
    return best


def normalize_to_canvas(proj: Projection2D, canvas_px: int = 512, margin_frac: float = 0.1) -> Projection2D:
    """Fit the bounding box into the centered sub-square, flipping the vertical axis.

    Uniform scale preserves aspect ratio; a degenerate box (zero extent both
    ways) maps every point to the canvas center. Pixel y grows downward.
    """
    canvas = CanvasSpec(size=canvas_px, margin=margin_frac)
    us = [proj.points[j][0] for j in JOINT_ORDER]
    ws = [proj.points[j][1] for j in JOINT_ORDER]
    u_min, u_max = min(us), max(us)
    w_min, w_max = min(ws), max(ws)
    extent = max(u_max - u_min, w_max - w_min)

    if extent <= 0:
        center = canvas_px / 2
        points = {j: (center, center) for j in JOINT_ORDER}
    else:
        scale = (1 - 2 * margin_frac) * canvas_px / extent
        x0 = (canvas_px - scale * (u_max - u_min)) / 2
        y0 = (canvas_px - scale * (w_max - w_min)) / 2
        points = {
            j: (x0 + scale * (u - u_min), y0 + scale * (w_max - w))
            for j, (u, w) in proj.points.items()
        }
    return Projection2D(points=points, theta=proj.theta, variance=proj.variance, canvas=canvas)
