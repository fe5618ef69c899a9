"""Prompt construction and structured parsing of LLM replies.

The three prompt templates ship verbatim as package resources. Parsing is
deliberately more tolerant than the templates demand: real model output wraps
the format in prose, code fences, and hash comments, so the parser strips all
of that and degrades to typed errors instead of crashing.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .errors import (
    DuplicateJoint,
    EmptyPrompt,
    MalformedKeypoints,
    MissingJoint,
    MissingRevision,
    MissingSection,
    MultiplePersons,
    NonNumericCoordinate,
    ParseError,
    UnparseableVerdict,
)
from .pose import JOINT_ORDER, JointId, Pose3D, canonical_joint, display_name

TEMPLATE_VERSION = "v1/user-prompt-appended"


class TemplateKind(enum.Enum):
    KeypointGenerator = "keypoint_generator"
    KeypointFeedback = "keypoint_feedback"
    ImageFeedback = "image_feedback"


def template_text(kind: TemplateKind) -> str:
    return resources.files("pointt2i.templates").joinpath(f"{kind.value}.txt").read_text()


@dataclass
class PoseAnalysis:
    """Parsed reply of the keypoint generator / keypoint feedback."""

    objects: list[str]
    actions: list[tuple[str, str]]
    analysis: list[tuple[str, list[str]]]
    keypoints: list[tuple[str, Pose3D]]

    @property
    def pose(self) -> Pose3D:
        return self.keypoints[0][1]

    @classmethod
    def single(cls, pose: Pose3D, action: str = "", label: str = "person #1") -> "PoseAnalysis":
        actions = [(label, action)] if action else []
        return cls(objects=[label], actions=actions, analysis=[], keypoints=[(label, pose)])


@dataclass
class Verdict:
    answer: bool  # True = Yes
    reason: str = ""
    revised: Optional[PoseAnalysis] = None


# --- prompt builders ---

def _require_prompt(user_prompt: str) -> str:
    if not user_prompt or not user_prompt.strip():
        raise EmptyPrompt("user prompt is empty")
    return user_prompt


def build_keypoint_prompt(user_prompt: str) -> str:
    _require_prompt(user_prompt)
    return f"{template_text(TemplateKind.KeypointGenerator)}\nUser prompt: {user_prompt}\n"


def build_keypoint_feedback_prompt(user_prompt: str, current: PoseAnalysis) -> str:
    _require_prompt(user_prompt)
    body = template_text(TemplateKind.KeypointFeedback)
    kp = serialize_keypoints(current.keypoints)
    return f"{body}\nUser prompt: {user_prompt}\nkeypoints_list: {kp}\n"


def build_image_feedback_prompt(user_prompt: str) -> str:
    _require_prompt(user_prompt)
    # Verbatim substitution, no quoting: the judge must see the prompt as-is.
    return template_text(TemplateKind.ImageFeedback).strip().replace("{prompt}", user_prompt)


# --- serialization (A.1 output syntax) ---

def serialize_keypoints(keypoints: list[tuple[str, Pose3D]]) -> str:
    persons = []
    for label, pose in keypoints:
        joints = ", ".join(
            f"{_quote(display_name(j))}: [{_num(pose[j][0])}, {_num(pose[j][1])}, {_num(pose[j][2])}]"
            for j in JOINT_ORDER
        )
        persons.append(f"({_quote(label)}, {{{joints}}})")
    return "[" + ", ".join(persons) + "]"


def serialize_analysis(result: PoseAnalysis) -> str:
    objects = "[" + ", ".join(_quote(o) for o in result.objects) + "]"
    actions = "[" + ", ".join(f"({_quote(o)}, {_quote(a)})" for o, a in result.actions) + "]"
    analysis = "[" + ", ".join(
        f"({_quote(o)}, [" + ", ".join(_quote(s) for s in statements) + "])"
        for o, statements in result.analysis
    ) + "]"
    return (
        f"Objects: {objects}\n"
        f"Actions: {actions}\n"
        f"Analysis: {analysis}\n"
        f"Keypoints: {serialize_keypoints(result.keypoints)}\n"
    )


def _quote(text: str) -> str:
    return "'" + text.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _num(value: float) -> str:
    return repr(int(value)) if isinstance(value, float) and value.is_integer() else repr(value)


# --- reply preprocessing ---

_FENCE = re.compile(r"^\s*```.*$", re.MULTILINE)
_LEADING_HASH = re.compile(r"^\s*#+\s?")


def _strip_trailing_comment(line: str) -> str:
    quote = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote:
            if ch == "\\":
                i += 1
            elif ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return line[:i]
        i += 1
    return line


def _preprocess(raw: str) -> str:
    text = _FENCE.sub("", raw)
    lines = []
    for line in text.split("\n"):
        line = _LEADING_HASH.sub("", line)
        lines.append(_strip_trailing_comment(line))
    return "\n".join(lines)


_SECTION_NAMES = ("Objects", "Actions", "Analysis", "Keypoints", "Answer", "Reason")
_SECTION_RE = re.compile(
    r"^[^\S\n]*(" + "|".join(_SECTION_NAMES) + r")[^\S\n]*:", re.MULTILINE | re.IGNORECASE
)


def _split_sections(text: str) -> dict[str, str]:
    """Map section name -> text between its header and the next header."""
    matches = list(_SECTION_RE.finditer(text))
    sections: dict[str, str] = {}
    for i, m in enumerate(matches):
        name = m.group(1).title()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        sections.setdefault(name, text[m.end():end])
    return sections


# --- keypoints grammar ---

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<str>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<punct>[\[\]{}(),:])
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r"}


def _unquote(token: str) -> str:
    body = token[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append(_ESCAPES.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _Cursor:
    """Token stream over a keypoints literal with positional errors."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> tuple[str, str, int]:
        self._skip_ws()
        if self.pos >= len(self.text):
            return ("eof", "", self.pos)
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None:
            raise MalformedKeypoints(self.pos, "a token")
        kind = m.lastgroup or ""
        return (kind, m.group(), m.end())

    def take(self, kind: str, literal: str | None = None) -> str:
        got_kind, value, end = self.peek()
        want = literal if literal is not None else kind
        if got_kind != kind or (literal is not None and value != literal):
            raise MalformedKeypoints(self.pos, want)
        self.pos = end
        return value

    def take_punct(self, literal: str) -> None:
        self.take("punct", literal)

    def at_punct(self, literal: str) -> bool:
        kind, value, _ = self.peek()
        return kind == "punct" and value == literal


def _parse_coordinate(cur: _Cursor) -> float:
    kind, value, end = cur.peek()
    if kind != "num":
        if kind in ("str", "ident"):
            raise NonNumericCoordinate(cur.pos, value)
        raise MalformedKeypoints(cur.pos, "a number")
    cur.pos = end
    return float(value)


def _parse_joint_map(cur: _Cursor) -> dict[JointId, tuple[float, float, float]]:
    cur.take_punct("{")
    joints: dict[JointId, tuple[float, float, float]] = {}
    while not cur.at_punct("}"):
        name_pos = cur.pos
        name = _unquote(cur.take("str"))
        joint = canonical_joint(name)
        if joint is None:
            raise MalformedKeypoints(name_pos, "a joint name")
        if joint in joints:
            raise DuplicateJoint(joint.name)
        cur.take_punct(":")
        cur.take_punct("[")
        coords = []
        for i in range(3):
            coords.append(_parse_coordinate(cur))
            if i < 2:
                cur.take_punct(",")
        if cur.at_punct(","):
            cur.take_punct(",")
        cur.take_punct("]")
        joints[joint] = (coords[0], coords[1], coords[2])
        if cur.at_punct(","):
            cur.take_punct(",")
    cur.take_punct("}")
    return joints


def parse_keypoints_literal(text: str) -> list[tuple[str, Pose3D]]:
    """Parse `[('label', {'Nose': [x, y, z], ...}), ...]` with typed errors."""
    start = text.find("[")
    if start < 0:
        raise MalformedKeypoints(0, "[")
    cur = _Cursor(text)
    cur.pos = start
    cur.take_punct("[")
    persons: list[tuple[str, Pose3D]] = []
    while not cur.at_punct("]"):
        cur.take_punct("(")
        label = _unquote(cur.take("str"))
        cur.take_punct(",")
        joints = _parse_joint_map(cur)
        cur.take_punct(")")
        for j in JOINT_ORDER:
            if j not in joints:
                raise MissingJoint(j.name)
        persons.append((label, Pose3D(joints)))
        if cur.at_punct(","):
            cur.take_punct(",")
    cur.take_punct("]")
    if not persons:
        raise MalformedKeypoints(start, "at least one person tuple")
    if len(persons) > 1:
        raise MultiplePersons(len(persons))
    return persons


# --- lenient helpers for the prose-ish sections ---

_QUOTED = re.compile(r"'((?:\\.|[^'\\])*)'|\"((?:\\.|[^\"\\])*)\"")


def _quoted_strings(text: str) -> list[str]:
    return [_unquote(m.group(0)) for m in _QUOTED.finditer(text)]


def _parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for m in re.finditer(r"\(\s*('(?:\\.|[^'\\])*')\s*,\s*('(?:\\.|[^'\\])*')\s*\)", text):
        pairs.append((_unquote(m.group(1)), _unquote(m.group(2))))
    return pairs


def _parse_analysis_section(text: str) -> list[tuple[str, list[str]]]:
    entries = []
    for m in re.finditer(r"\(\s*('(?:\\.|[^'\\])*')\s*,\s*\[(.*?)\]\s*\)", text, re.DOTALL):
        entries.append((_unquote(m.group(1)), _quoted_strings(m.group(2))))
    return entries


# --- public parsers ---

def parse_analysis(raw: str) -> PoseAnalysis:
    """Extract Objects/Actions/Analysis/Keypoints from a full LLM reply."""
    text = _preprocess(raw)
    sections = _split_sections(text)
    if "Keypoints" not in sections:
        raise MissingSection("Keypoints")
    keypoints = parse_keypoints_literal(sections["Keypoints"])
    label = keypoints[0][0]

    objects = _quoted_strings(sections.get("Objects", "")) or [label]
    actions = _parse_pairs(sections.get("Actions", ""))
    analysis = _parse_analysis_section(sections.get("Analysis", ""))
    return PoseAnalysis(objects=objects, actions=actions, analysis=analysis, keypoints=keypoints)


_YES_NO = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


def parse_keypoint_verdict(raw: str) -> Verdict:
    """Parse a keypoint-feedback reply; 'No' replies must carry revised keypoints."""
    text = _preprocess(raw)
    sections = _split_sections(text)
    if "Answer" not in sections:
        raise UnparseableVerdict("no Answer section")
    m = _YES_NO.search(sections["Answer"])
    if m is None:
        raise UnparseableVerdict(f"Answer section has no yes/no: {sections['Answer']!r}")
    answer = m.group(1).lower() == "yes"
    reason_strings = _quoted_strings(sections.get("Reason", ""))
    reason = reason_strings[0] if reason_strings else sections.get("Reason", "").strip()

    revised = None
    if not answer:
        try:
            revised = parse_analysis(raw)
        except MissingSection as exc:
            raise MissingRevision(f"'No' verdict without regenerated keypoints: {exc}") from exc
    return Verdict(answer=answer, reason=reason, revised=revised)


def parse_image_verdict(raw: str) -> Verdict:
    """First standalone yes/no token wins; the remainder is the reason."""
    m = _YES_NO.search(raw)
    if m is None:
        raise UnparseableVerdict("reply contains no standalone yes/no")
    reason = raw[m.end():].lstrip(" \t,.;:!-—").strip()
    return Verdict(answer=m.group(1).lower() == "yes", reason=reason)
