"""Cue-phrase detection in titles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

DEFAULT_PHRASES = ("misdiagnosed as", "masquerading as")


@dataclass(frozen=True)
class CueHit:
    phrase: str
    start: int
    end: int


def _fold(text: str) -> str:
    # str.lower can change length for a few code points (e.g. U+0130); keep
    # offsets aligned with the original title by folding per character.
    lowered = text.lower()
    if len(lowered) == len(text):
        return lowered
    return "".join(c if len(c.lower()) != 1 else c.lower() for c in text)


def find_cue(title: str, phrases: Sequence[str] = DEFAULT_PHRASES) -> Optional[CueHit]:
    """Return the earliest case-insensitive occurrence of any phrase.

    Ties on start offset go to the phrase listed first.
    """
    if not phrases or any(not p for p in phrases):
        raise ValueError("phrases must be a non-empty list of non-empty strings")
    folded = _fold(title)
    best: Optional[CueHit] = None
    for phrase in phrases:
        pos = folded.find(_fold(phrase))
        if pos >= 0 and (best is None or pos < best.start):
            best = CueHit(phrase, pos, pos + len(phrase))
    return best
