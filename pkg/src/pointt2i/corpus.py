"""Built-in prompt corpora: yoga, acrobatic, and common pose prompts of the
form "A person is performing {pose}.", plus rephrased yoga descriptions."""

from __future__ import annotations

from dataclasses import dataclass

PROMPT_FORMAT = "A person is performing {pose}."


@dataclass(frozen=True)
class Corpus:
    name: str
    entries: tuple[tuple[str, str], ...]  # (pose label, prompt)

    @property
    def prompts(self) -> list[str]:
        return [prompt for _, prompt in self.entries]


def _performing(poses: list[str]) -> tuple[tuple[str, str], ...]:
    return tuple((pose, PROMPT_FORMAT.format(pose=pose)) for pose in poses)


YOGA = Corpus("yoga", _performing([
    "the cow and cat pose",
    "the downward dog pose",
    "the boat pose",
    "the split pose",
    "the tree pose",
]))

ACROBATIC = Corpus("acrobatic", _performing([
    "hollow hold",
    "L-sit",
    "one-arm handstand",
    "windmill",
    "Y-scale",
]))

COMMON = Corpus("common", _performing([
    "kicking",
    "raising both hands",
    "raising one hand",
    "punching",
    "standing",
]))

YOGA_REPHRASED = Corpus("yoga-rephrased", (
    ("the cow and cat pose",
     "The pose by arching their back, lifting their chest and tailbone, and gazing slightly "
     "forward while on all fours."),
    ("the downward dog pose",
     "The pose by lifting their hips, straightening their limbs, and forming an inverted V-shape."),
    ("the boat pose",
     "The pose by leaning back slightly, lifting their legs, and extending their arms forward "
     "while engaging their core for balance."),
    ("the split pose",
     "The pose sits with one leg split forward and the other split backward along the floor."),
    ("the tree pose",
     "The pose by standing on one leg, placing the other foot against the inner thigh or calf, "
     "and bringing their hands together at the chest or reaching overhead while maintaining balance."),
))

CORPORA: dict[str, Corpus] = {c.name: c for c in (YOGA, ACROBATIC, COMMON, YOGA_REPHRASED)}


def full_prompt_set() -> list[str]:
    """The 15-prompt evaluation set: yoga + acrobatic + common."""
    return YOGA.prompts + ACROBATIC.prompts + COMMON.prompts
