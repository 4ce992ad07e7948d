"""Conversion between BIO-tagged token sequences and slot-value pairs.

``bio_to_pairs`` extracts the gold pairs used as generation targets: a
chunk starts at ``B-s`` and extends over consecutive ``I-s`` with the same
slot, its value is the chunk's tokens joined by single spaces, and pairs
come out in chunk-start order.  ``pairs_to_bio`` is the inverse used for
round-trip checks and tag-level rescoring.  Both are total over noisy
input: orphan ``I-`` tags are repaired as chunk starts and pairs that
cannot be placed back are skipped, with counts returned so noise stays
observable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexicon import SLOT, LabelLexicon
from .spans import PairSpan, SlotValuePair


class BioError(ValueError):
    """Raised for malformed utterances, malformed tags, or length mismatch."""


@dataclass(frozen=True)
class Utterance:
    """Tokenized user input; ``raw_text`` is the single-space join."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise BioError("utterance needs at least one token")
        for token in self.tokens:
            if not token or any(ch.isspace() for ch in token):
                raise BioError(f"bad token {token!r}: empty or contains whitespace")

    @property
    def raw_text(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def from_text(cls, text: str) -> "Utterance":
        return cls(tuple(text.split()))


@dataclass(frozen=True)
class BioSequence:
    """Tags aligned with an utterance: ``O``, ``B-<slot>``, or ``I-<slot>``."""

    tags: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tags", tuple(self.tags))
        for tag in self.tags:
            if tag == "O":
                continue
            if len(tag) > 2 and tag[0] in "BI" and tag[1] == "-":
                continue
            raise BioError(f"bad BIO tag {tag!r}")


def bio_to_pairs(
    utt: Utterance, bio: BioSequence, lexicon: LabelLexicon
) -> tuple[PairSpan, int]:
    """Extract slot-value pairs from tags, left to right.

    Returns the pairs (slots rendered as lexicon descriptions) and the
    number of orphan ``I-`` tags repaired as chunk starts.
    """
    if len(bio.tags) != len(utt.tokens):
        raise BioError(
            f"{len(bio.tags)} tags for {len(utt.tokens)} tokens"
        )
    chunks: list[tuple[str, int, int]] = []  # (raw slot, start, end exclusive)
    repairs = 0
    open_chunk: tuple[str, int] | None = None
    for i, tag in enumerate(bio.tags):
        if tag == "O":
            if open_chunk is not None:
                chunks.append((open_chunk[0], open_chunk[1], i))
                open_chunk = None
            continue
        kind, slot = tag[0], tag[2:]
        if kind == "I" and open_chunk is not None and open_chunk[0] == slot:
            continue  # extends the open chunk
        if kind == "I":
            repairs += 1  # orphan I- treated as a chunk start
        if open_chunk is not None:
            chunks.append((open_chunk[0], open_chunk[1], i))
        open_chunk = (slot, i)
    if open_chunk is not None:
        chunks.append((open_chunk[0], open_chunk[1], len(bio.tags)))
    pairs = tuple(
        SlotValuePair(lexicon.describe(SLOT, slot), " ".join(utt.tokens[start:end]))
        for slot, start, end in chunks
    )
    return PairSpan(pairs), repairs


def pairs_to_bio(
    utt: Utterance, span: PairSpan, lexicon: LabelLexicon
) -> tuple[BioSequence, int]:
    """Retag an utterance from pairs; inverse of ``bio_to_pairs``.

    Each pair claims the leftmost not-yet-tagged token window that equals
    its value.  Pairs whose slot the lexicon cannot invert, or whose value
    finds no free window, are skipped; the skip count is returned.
    """
    tags = ["O"] * len(utt.tokens)
    unmatched = 0
    for pair in span.pairs:
        raw, known = lexicon.unlabel(SLOT, pair.slot)
        if not known:
            unmatched += 1
            continue
        value_tokens = tuple(pair.value.split())
        k = len(value_tokens)
        if k == 0:
            unmatched += 1
            continue
        position = -1
        for i in range(len(utt.tokens) - k + 1):
            if utt.tokens[i : i + k] != value_tokens:
                continue
            if all(tags[i + j] == "O" for j in range(k)):
                position = i
                break
        if position < 0:
            unmatched += 1
            continue
        tags[position] = f"B-{raw}"
        for j in range(1, k):
            tags[position + j] = f"I-{raw}"
    return BioSequence(tuple(tags)), unmatched
