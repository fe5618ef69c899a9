"""Exception hierarchy shared across the package.

Every failure mode surfaced to callers is a subclass of PointT2IError so the
CLI can map library failures to a single exit code.
"""

from __future__ import annotations


class PointT2IError(Exception):
    """Base class for all package errors."""


# --- pose geometry ---

class DegeneratePose(PointT2IError):
    """The pose has no measurable torso (shoulder/hip midpoints coincide)."""


# --- prompt building / response parsing ---

class EmptyPrompt(PointT2IError):
    """A prompt template was asked to wrap an empty user prompt."""


class ParseError(PointT2IError):
    """Base for structured-output parsing failures."""


class MissingSection(ParseError):
    def __init__(self, name: str):
        super().__init__(f"reply has no '{name}' section")
        self.name = name


class MalformedKeypoints(ParseError):
    def __init__(self, position: int, expected: str):
        super().__init__(f"malformed keypoints at offset {position}: expected {expected}")
        self.position = position
        self.expected = expected


class MissingJoint(ParseError):
    def __init__(self, joint: str):
        super().__init__(f"keypoints lack joint {joint}")
        self.joint = joint


class DuplicateJoint(ParseError):
    def __init__(self, joint: str):
        super().__init__(f"joint {joint} appears more than once")
        self.joint = joint


class MultiplePersons(ParseError):
    def __init__(self, count: int):
        super().__init__(f"expected a single person, reply contains {count}")
        self.count = count


class NonNumericCoordinate(ParseError):
    def __init__(self, position: int, token: str):
        super().__init__(f"coordinate at offset {position} is not a number: {token!r}")
        self.position = position
        self.token = token


class UnparseableVerdict(ParseError):
    """No recognizable Yes/No decision in a feedback reply."""


class MissingRevision(ParseError):
    """A 'No' keypoint-feedback reply carried no regenerated keypoints."""


# --- LLM transport ---

class AuthError(PointT2IError):
    """401/403 from the endpoint; never retried."""


class TransportError(PointT2IError):
    """Transient transport failure persisted past the retry budget."""


class ProtocolError(PointT2IError):
    """Endpoint responded with a payload we cannot interpret."""


class ScriptExhausted(PointT2IError):
    """A scripted mock transport ran out of scripted outcomes."""


# --- rendering / backends ---

class NotNormalized(PointT2IError):
    """Operation requires a projection already normalized to a canvas."""


class BackendUnavailable(PointT2IError):
    """Image backend unreachable or persistently 5xx."""


class BackendRejected(PointT2IError):
    """Image backend rejected the request (4xx)."""


class DecodeError(PointT2IError):
    """Backend reply did not decode as a valid PNG."""
