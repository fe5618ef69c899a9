"""Chat-completions transport (OpenAI-compatible wire shape) with retries.

The real transport speaks JSON over HTTPS. Tests and hermetic runs install a
scripted transport instead; retry/backoff classification lives in the client
so both paths share it.
"""

from __future__ import annotations

import base64
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import httpx

from .errors import AuthError, ProtocolError, ScriptExhausted, TransportError

DEFAULT_API_KEY_ENV = "POINTT2I_LLM_API_KEY"

_BACKOFF_BASE = 1.0
_BACKOFF_FACTOR = 2.0


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str = "https://api.openai.com/v1"
    keypoint_model: str = "o1-preview"
    keypoint_feedback_model: str = "o1-preview"
    image_feedback_model: str = "gpt-4o"
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout: float = 120.0
    max_retries: int = 3
    temperature: Optional[float] = None

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise AuthError(f"environment variable {self.api_key_env} is not set")
        return key


@dataclass(frozen=True)
class ImagePart:
    media_type: str
    data_b64: str

    @classmethod
    def from_png(cls, png_bytes: bytes) -> "ImagePart":
        return cls("image/png", base64.b64encode(png_bytes).decode("ascii"))


ContentPart = Union[str, ImagePart]


@dataclass(frozen=True)
class ChatMessage:
    role: str
    parts: tuple[ContentPart, ...]

    @property
    def text(self) -> str:
        return "\n".join(p for p in self.parts if isinstance(p, str))


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("ChatRequest needs at least one message")

    @classmethod
    def text_only(cls, model: str, prompt: str, temperature: Optional[float] = None) -> "ChatRequest":
        return cls(model=model, messages=(ChatMessage("user", (prompt,)),), temperature=temperature)

    @classmethod
    def with_image(
        cls, model: str, prompt: str, image: ImagePart, temperature: Optional[float] = None
    ) -> "ChatRequest":
        return cls(model=model, messages=(ChatMessage("user", (prompt, image)),), temperature=temperature)

    def has_images(self) -> bool:
        return any(isinstance(p, ImagePart) for m in self.messages for p in m.parts)

    def to_wire(self) -> dict:
        messages = []
        for m in self.messages:
            if all(isinstance(p, str) for p in m.parts):
                content: Any = "\n".join(m.parts)  # type: ignore[arg-type]
            else:
                content = [
                    {"type": "text", "text": p}
                    if isinstance(p, str)
                    else {
                        "type": "image_url",
                        "image_url": {"url": f"data:{p.media_type};base64,{p.data_b64}"},
                    }
                    for p in m.parts
                ]
            messages.append({"role": m.role, "content": content})
        wire: dict = {"model": self.model, "messages": messages}
        if self.temperature is not None:
            wire["temperature"] = self.temperature
        return wire


@dataclass
class ChatReply:
    text: str
    usage: Optional[dict] = None
    raw: Optional[dict] = None


@dataclass
class TransportResult:
    """One transport attempt: an HTTP-ish status plus a decoded payload."""

    status: int
    payload: Any = None


# A transport maps a wire-format request dict to a TransportResult, or raises
# TimeoutError / ConnectionError for network-level failures.
Transport = Callable[[dict], TransportResult]


class HttpTransport:
    def __init__(self, config: LlmConfig):
        self._config = config
        self._client = httpx.Client(timeout=config.timeout)

    def __call__(self, wire: dict) -> TransportResult:
        url = self._config.endpoint.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {self._config.api_key()}"}
        try:
            response = self._client.post(url, json=wire, headers=headers)
        except httpx.TimeoutException as exc:
            raise TimeoutError(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ConnectionError(str(exc)) from exc
        try:
            payload = response.json()
        except ValueError:
            payload = None
        return TransportResult(status=response.status_code, payload=payload)


ScriptItem = Union[ChatReply, TransportResult, Exception, str]


class ScriptedTransport:
    """Replays scripted outcomes in order and records every request."""

    def __init__(self, script: Sequence[ScriptItem]):
        if not script:
            raise ValueError("script must be non-empty")
        self._script = list(script)
        self._cursor = 0
        self.requests: list[dict] = []
        self._lock = threading.Lock()

    def __call__(self, wire: dict) -> TransportResult:
        with self._lock:
            self.requests.append(wire)
            if self._cursor >= len(self._script):
                raise ScriptExhausted(f"scripted transport exhausted after {len(self._script)} calls")
            item = self._script[self._cursor]
            self._cursor += 1
        if isinstance(item, Exception):
            raise item
        if isinstance(item, TransportResult):
            return item
        text = item.text if isinstance(item, ChatReply) else item
        return TransportResult(status=200, payload=_completion_payload(text))


def _completion_payload(text: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": text}}], "usage": None}


def mock_transport(script: Sequence[ScriptItem]) -> ScriptedTransport:
    return ScriptedTransport(script)


class LlmClient:
    """Retrying client over a pluggable transport.

    Transient failures (HTTP 429/5xx, timeouts, connection errors) retry with
    exponential backoff and full jitter; auth failures never retry.
    """

    def __init__(
        self,
        config: LlmConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.config = config
        self._transport = transport if transport is not None else HttpTransport(config)
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._lock = threading.Lock()
        self.history: list[tuple[dict, ChatReply]] = []

    def complete(self, request: ChatRequest) -> ChatReply:
        if request.has_images() and request.model != self.config.image_feedback_model:
            raise ValueError(
                f"model {request.model!r} is not the configured vision model; "
                "image parts are only allowed on the image-feedback model"
            )
        wire = request.to_wire()
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt > 0:
                delay = _BACKOFF_BASE * (_BACKOFF_FACTOR ** (attempt - 1))
                self._sleep(self._rng.uniform(0.0, delay))
            try:
                result = self._transport(wire)
            except (TimeoutError, ConnectionError) as exc:
                last_error = exc
                continue
            if result.status in (401, 403):
                raise AuthError(f"endpoint returned HTTP {result.status}")
            if result.status == 429 or result.status >= 500:
                last_error = TransportError(f"endpoint returned HTTP {result.status}")
                continue
            if result.status != 200:
                raise ProtocolError(f"unexpected HTTP {result.status}")
            reply = self._decode(result.payload)
            with self._lock:
                self.history.append((wire, reply))
            return reply
        raise TransportError(f"retries exhausted after {attempts} attempts: {last_error}")

    @staticmethod
    def _decode(payload: Any) -> ChatReply:
        try:
            choice = payload["choices"][0]
            content = choice["message"]["content"]
        except (TypeError, KeyError, IndexError) as exc:
            raise ProtocolError(f"unparseable completion payload: {payload!r}") from exc
        if isinstance(content, list):  # content-parts reply shape
            content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
        if not isinstance(content, str):
            raise ProtocolError(f"completion content is not text: {content!r}")
        return ChatReply(text=content, usage=payload.get("usage"), raw=payload)


class KindDispatchTransport:
    """Hermetic transport answering by prompt kind instead of call order.

    Replies are keyed by template kind; a list value is consumed in order with
    the last entry repeating. Used by the CLI `--llm mock:<file>` mode where
    concurrent runs make a strictly ordered script impractical.
    """

    def __init__(self, replies: dict[str, Union[str, list[str]]]):
        self._replies = {k: list(v) if isinstance(v, list) else [v] for k, v in replies.items()}
        self._cursors: dict[str, int] = {}
        self._lock = threading.Lock()
        self.requests: list[dict] = []

    @staticmethod
    def classify(wire: dict) -> str:
        text = ""
        for message in wire.get("messages", []):
            content = message.get("content")
            if isinstance(content, str):
                text += content
            elif isinstance(content, list):
                text += "".join(p.get("text", "") for p in content if isinstance(p, dict))
        if "keypoints_list" in text:
            return "keypoint_feedback"
        if text.startswith("Is this depicting"):
            return "image_feedback"
        return "keypoint_generator"

    def __call__(self, wire: dict) -> TransportResult:
        kind = self.classify(wire)
        with self._lock:
            self.requests.append(wire)
            replies = self._replies.get(kind)
            if not replies:
                raise ScriptExhausted(f"mock has no reply for kind {kind!r}")
            index = self._cursors.get(kind, 0)
            self._cursors[kind] = index + 1
            text = replies[min(index, len(replies) - 1)]
        return TransportResult(status=200, payload=_completion_payload(text))
