"""Belief-span codec: flat text encodings of structured SLU output.

Three span kinds share one grammar: items joined by ``", "``, key-value
items split on ``" : "``. Empty spans render as the sentinel ``"none"``,
because generation targets must be non-empty text. Serializers demand
well-formed spans; parsers accept arbitrary model output and report a
malformed-item count instead of failing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ITEM_SEP = ", "
KV_SEP = " : "
EMPTY_SPAN = "none"

_INTENT_PREFIX = re.compile(r"^intent\s*:\s*")
_SLOT_PREFIX = re.compile(r"^slot\s*:\s*")


def _check_entry(value: str, field: str, forbid_kv: bool = True) -> None:
    if not value:
        raise ValueError(f"{field} must be non-empty")
    if ITEM_SEP in value:
        raise ValueError(f"{field} {value!r} contains reserved delimiter {ITEM_SEP!r}")
    if forbid_kv and KV_SEP in value:
        raise ValueError(f"{field} {value!r} contains reserved delimiter {KV_SEP!r}")


@dataclass(frozen=True)
class SlotValuePair:
    """One (slot description, verbatim value span) pair.

    The value may contain a bare colon; the slot side must stay free of
    both delimiters so the first ``" : "`` in a rendered item is always
    the slot/value boundary.
    """

    slot: str
    value: str

    def __post_init__(self) -> None:
        _check_entry(self.slot, "slot")
        _check_entry(self.value, "value", forbid_kv=False)


@dataclass(frozen=True)
class IntentSpan:
    """Ordered intent descriptions."""

    intents: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "intents", tuple(self.intents))
        for entry in self.intents:
            _check_entry(entry, "intent")


@dataclass(frozen=True)
class PairSpan:
    """Ordered slot-value pairs, in utterance appearance order.

    Duplicates are kept; eliminating repeated pairs is the evaluator's
    job, not the codec's.
    """

    pairs: tuple[SlotValuePair, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))
        for pair in self.pairs:
            if not isinstance(pair, SlotValuePair):
                raise TypeError(f"expected SlotValuePair, got {type(pair).__name__}")


@dataclass(frozen=True)
class SlotSpan:
    """Ordered slot-type descriptions."""

    slots: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", tuple(self.slots))
        for entry in self.slots:
            _check_entry(entry, "slot")


def serialize_intents(span: IntentSpan) -> str:
    if not span.intents:
        return EMPTY_SPAN
    return ITEM_SEP.join(f"intent{KV_SEP}{entry}" for entry in span.intents)


def serialize_pairs(span: PairSpan) -> str:
    if not span.pairs:
        return EMPTY_SPAN
    return ITEM_SEP.join(f"{pair.slot}{KV_SEP}{pair.value}" for pair in span.pairs)


def serialize_slots(span: SlotSpan) -> str:
    if not span.slots:
        return EMPTY_SPAN
    return ITEM_SEP.join(f"slot{KV_SEP}{entry}" for entry in span.slots)


def _split_items(text: str) -> list[str] | None:
    """Item list, or None when the input is blank or the empty sentinel."""
    stripped = text.strip()
    if not stripped or stripped == EMPTY_SPAN:
        return None
    return stripped.split(ITEM_SEP)


def _parse_keyed(text: str, prefix: re.Pattern[str]) -> tuple[list[str], int]:
    items = _split_items(text)
    if items is None:
        return [], 0
    entries: list[str] = []
    seen: set[str] = set()
    malformed = 0
    for item in items:
        entry = prefix.sub("", item.strip(), count=1).strip()
        if not entry:
            continue
        if KV_SEP in entry:
            # Leftover key-value structure: not a usable description.
            malformed += 1
            continue
        if entry not in seen:
            seen.add(entry)
            entries.append(entry)
    return entries, malformed


def parse_intents(text: str) -> tuple[IntentSpan, int]:
    """Best-effort inverse of serialize_intents over untrusted text.

    Splits on the item separator, strips an optional ``intent :`` or
    ``intent:`` prefix per item, trims, drops empties, and deduplicates
    preserving first occurrence. Returns the span and a malformed count.
    """
    entries, malformed = _parse_keyed(text, _INTENT_PREFIX)
    return IntentSpan(entries), malformed


def parse_slots(text: str) -> tuple[SlotSpan, int]:
    """Same recovery grammar as parse_intents with prefix token ``slot``."""
    entries, malformed = _parse_keyed(text, _SLOT_PREFIX)
    return SlotSpan(entries), malformed


def parse_pairs(text: str) -> tuple[PairSpan, int]:
    """Parse slot-value items, splitting each on its first ``" : "``.

    Values may contain bare colons; the first separator wins because
    slots are lexicon-controlled and delimiter-free. Items without the
    separator, or with an empty side, are dropped and counted. No
    deduplication happens here.
    """
    items = _split_items(text)
    if items is None:
        return PairSpan(), 0
    pairs: list[SlotValuePair] = []
    malformed = 0
    for item in items:
        item = item.strip()
        if KV_SEP not in item:
            malformed += 1
            continue
        slot, value = item.split(KV_SEP, 1)
        slot = slot.strip()
        value = value.strip()
        if not slot or not value:
            malformed += 1
            continue
        pairs.append(SlotValuePair(slot, value))
    return PairSpan(pairs), malformed
