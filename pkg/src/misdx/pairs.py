"""Selection rule: exactly one concept on each side of the cue phrase."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import Citation
from .cues import CueHit
from .matcher import MatchGroup

ZERO_MATCHES = "zero_matches"
ONE_MATCH = "one_match"
TOO_MANY_MATCHES = "too_many_matches"
BOTH_SAME_SIDE = "both_same_side"
REJECTION_REASONS = (ZERO_MATCHES, ONE_MATCH, TOO_MANY_MATCHES, BOTH_SAME_SIDE)


@dataclass(frozen=True)
class RawPair:
    source_cui: str
    dest_cui: str
    pmid: str
    title: str


def extract_pair(
    citation: Citation, cue: CueHit, groups: Sequence[MatchGroup]
) -> tuple[Optional[RawPair], Optional[str]]:
    """Return ``(pair, None)`` for a selected title, else ``(None, reason)``."""
    if not groups:
        return None, ZERO_MATCHES
    if len(groups) == 1:
        return None, ONE_MATCH
    if len(groups) > 2:
        return None, TOO_MANY_MATCHES
    before, after = groups
    # adjacency to the cue counts as being on the correct side
    if before.end <= cue.start and after.start >= cue.end:
        return RawPair(before.winner.cui, after.winner.cui, citation.pmid, citation.title), None
    return None, BOTH_SAME_SIDE
