"""Image-generation backends behind one small wire protocol.

Remote diffusion servers sit behind `POST {base}/v1/generate`. The stub
backend composites the conditioning onto a flat canvas locally so the whole
pipeline, image feedback included, runs without a network.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import httpx
import numpy as np

from .errors import BackendRejected, BackendUnavailable, DecodeError
from .raster import decode_png, encode_png, png_size
from .render import KeypointConditioning

STUB_BACKGROUND = (128, 128, 128)
_WATERMARK_ROWS = 4
_RETRY_DELAYS = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class GenRequest:
    prompt: str
    seed: int
    width: int = 512
    height: int = 512
    keypoints: Optional[KeypointConditioning] = None
    skeleton_png: Optional[bytes] = None
    params: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("size must be positive")
        if (self.keypoints is None) == (self.skeleton_png is None):
            raise ValueError("exactly one conditioning kind is required")

    @property
    def conditioning_kind(self) -> str:
        return "keypoints" if self.keypoints is not None else "skeleton"

    def to_wire(self) -> dict:
        if self.keypoints is not None:
            conditioning: dict = {"kind": "keypoints", "data": self.keypoints.to_dict()}
        else:
            conditioning = {
                "kind": "skeleton",
                "data": base64.b64encode(self.skeleton_png).decode("ascii"),
            }
        return {
            "prompt": self.prompt,
            "seed": self.seed,
            "width": self.width,
            "height": self.height,
            "conditioning": conditioning,
            "params": dict(self.params),
        }

    @classmethod
    def from_wire(cls, wire: dict) -> "GenRequest":
        cond = wire["conditioning"]
        keypoints = skeleton = None
        if cond["kind"] == "keypoints":
            keypoints = KeypointConditioning.from_dict(cond["data"])
        elif cond["kind"] == "skeleton":
            skeleton = base64.b64decode(cond["data"])
        else:
            raise ValueError(f"unknown conditioning kind {cond['kind']!r}")
        return cls(
            prompt=wire["prompt"],
            seed=int(wire["seed"]),
            width=int(wire["width"]),
            height=int(wire["height"]),
            keypoints=keypoints,
            skeleton_png=skeleton,
            params={str(k): str(v) for k, v in wire.get("params", {}).items()},
        )

    def digest(self) -> dict:
        """Request summary for run records (conditioning bytes elided)."""
        return {
            "prompt": self.prompt,
            "seed": self.seed,
            "width": self.width,
            "height": self.height,
            "conditioning_kind": self.conditioning_kind,
            "params": dict(self.params),
        }


@dataclass
class GenResult:
    image_png: bytes
    backend_id: str
    latency_ms: float
    seed: int

    def __post_init__(self) -> None:
        try:
            png_size(self.image_png)
        except DecodeError:
            raise


class StubBackend:
    """Deterministic local "generator": conditioning over a flat gray canvas.

    The bottom rows carry a seed watermark so different seeds produce
    different but predictable bytes.
    """

    backend_id = "stub"

    def generate(self, req: GenRequest) -> GenResult:
        start = time.monotonic()
        pixels = np.empty((req.height, req.width, 3), dtype=np.uint8)
        pixels[:] = STUB_BACKGROUND

        if req.skeleton_png is not None:
            skeleton = decode_png(req.skeleton_png)
            skeleton = _nearest_resize(skeleton, req.width, req.height)
            background = skeleton[0, 0].copy()
            mask = np.any(skeleton != background, axis=2)
            pixels[mask] = skeleton[mask]
        else:
            assert req.keypoints is not None
            from .raster import Canvas

            canvas = Canvas(req.width, req.height, STUB_BACKGROUND)
            for x, y in req.keypoints.points:
                canvas.fill_disc(x * req.width, y * req.height, 4.0, (255, 255, 255))
            pixels = canvas.pixels

        _stamp_seed(pixels, req.seed)
        png = encode_png(pixels)
        latency = (time.monotonic() - start) * 1000
        return GenResult(image_png=png, backend_id=self.backend_id, latency_ms=latency, seed=req.seed)


def _nearest_resize(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    src_h, src_w = pixels.shape[:2]
    if (src_w, src_h) == (width, height):
        return pixels
    rows = (np.arange(height) * src_h) // height
    cols = (np.arange(width) * src_w) // width
    return pixels[rows][:, cols]


def _stamp_seed(pixels: np.ndarray, seed: int) -> None:
    """Encode the low 64 seed bits as black/white blocks across the bottom rows."""
    height, width = pixels.shape[:2]
    rows = min(_WATERMARK_ROWS, height)
    block = max(1, width // 64)
    for bit in range(64):
        x0 = bit * block
        if x0 >= width:
            break
        value = 255 if (seed >> bit) & 1 else 0
        pixels[height - rows :, x0 : x0 + block] = value


class HttpBackend:
    """Adapter speaking the `/v1/generate` JSON protocol."""

    def __init__(self, base_url: str, timeout: float = 120.0, client: httpx.Client | None = None,
                 sleep=time.sleep):
        self.backend_id = base_url
        self._url = base_url.rstrip("/") + "/v1/generate"
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def generate(self, req: GenRequest) -> GenResult:
        start = time.monotonic()
        last_error: Exception | None = None
        for attempt in range(len(_RETRY_DELAYS) + 1):
            if attempt > 0:
                self._sleep(_RETRY_DELAYS[attempt - 1])
            try:
                response = self._client.post(self._url, json=req.to_wire())
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500 or response.status_code == 429:
                last_error = BackendUnavailable(f"HTTP {response.status_code}")
                continue
            if response.status_code >= 400:
                raise BackendRejected(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                payload = response.json()
                image = base64.b64decode(payload["image_b64"])
                seed = int(payload.get("seed", req.seed))
            except (ValueError, KeyError, TypeError) as exc:
                raise DecodeError(f"malformed generate reply: {exc}") from exc
            png_size(image)  # raises DecodeError on junk bytes
            latency = (time.monotonic() - start) * 1000
            return GenResult(image_png=image, backend_id=self.backend_id, latency_ms=latency, seed=seed)
        raise BackendUnavailable(f"backend unreachable after retries: {last_error}")


Backend = Union[StubBackend, HttpBackend]


def stub_backend() -> StubBackend:
    return StubBackend()
