"""Mapping between raw corpus labels and natural-language descriptions.

Raw intent and slot labels (``atis_flight``, ``fromloc.city_name``) are
rewritten as short phrases before they appear inside prompts or targets.
The default rewrite strips a leading ``atis_``, turns ``_`` and ``.`` into
spaces, and lowercases.  A lexicon file may override individual labels with
hand-written descriptions.  Descriptions must stay unique per namespace so
the mapping can be inverted when reading generated text back.
"""

from __future__ import annotations

import re
from pathlib import Path

INTENT = "intent"
SLOT = "slot"
_NAMESPACES = (INTENT, SLOT)

# Delimiters of the span serialization; a description containing either
# could not be parsed back out of a generated span.
_RESERVED = (", ", " : ")

_ATIS_PREFIX = re.compile(r"^atis_")
_SEPARATORS = re.compile(r"[._]+")


class LexiconError(ValueError):
    """Raised for malformed lexicon files and non-invertible mappings."""


def derive_default_description(raw: str) -> str:
    """Rewrite a raw label as its default natural-language description."""
    if not raw:
        raise LexiconError("empty label")
    text = _ATIS_PREFIX.sub("", raw)
    text = _SEPARATORS.sub(" ", text).strip().lower()
    if not text:
        raise LexiconError(f"label {raw!r} derives an empty description")
    return text


def _check_description(desc: str, origin: str) -> None:
    if not desc:
        raise LexiconError(f"{origin}: empty description")
    for sep in _RESERVED:
        if sep in desc:
            raise LexiconError(f"{origin}: description {desc!r} contains reserved {sep!r}")


def _check_namespace(namespace: str) -> None:
    if namespace not in _NAMESPACES:
        raise LexiconError(f"unknown namespace {namespace!r}; expected one of {_NAMESPACES}")


class LabelLexicon:
    """Per-namespace label descriptions with an invertible lookup.

    ``describe`` prefers an explicit entry and falls back to the default
    derivation.  ``unlabel`` inverts ``describe`` over every label seen so
    far: explicit entries plus labels passed to ``register_label``.
    Uniqueness of descriptions within a namespace is enforced on every
    insertion, so the inverse is total over the known inventory.
    """

    def __init__(self) -> None:
        self.intent_to_desc: dict[str, str] = {}
        self.slot_to_desc: dict[str, str] = {}
        self._inverse: dict[str, dict[str, str]] = {INTENT: {}, SLOT: {}}
        self._registered: dict[str, set[str]] = {INTENT: set(), SLOT: set()}

    def _explicit(self, namespace: str) -> dict[str, str]:
        return self.intent_to_desc if namespace == INTENT else self.slot_to_desc

    def add_entry(self, namespace: str, raw: str, desc: str, origin: str = "entry") -> None:
        """Add an explicit description, rejecting duplicates and collisions."""
        _check_namespace(namespace)
        if not raw:
            raise LexiconError(f"{origin}: empty label")
        _check_description(desc, origin)
        explicit = self._explicit(namespace)
        if raw in explicit:
            raise LexiconError(f"{origin}: duplicate entry for {namespace} {raw!r}")
        inverse = self._inverse[namespace]
        if desc in inverse and inverse[desc] != raw:
            raise LexiconError(
                f"{origin}: description {desc!r} already maps to {inverse[desc]!r}"
            )
        explicit[raw] = desc
        inverse[desc] = raw

    def register_label(self, namespace: str, raw: str) -> str:
        """Record a corpus label so its description can be inverted later.

        Returns the description.  Registering the same label twice is a
        no-op; two labels that share a description raise ``LexiconError``.
        """
        _check_namespace(namespace)
        desc = self.describe(namespace, raw)
        registered = self._registered[namespace]
        if raw in registered:
            return desc
        inverse = self._inverse[namespace]
        if desc in inverse and inverse[desc] != raw:
            raise LexiconError(
                f"labels {inverse[desc]!r} and {raw!r} both describe as {desc!r}"
            )
        inverse[desc] = raw
        registered.add(raw)
        return desc

    def describe(self, namespace: str, raw: str) -> str:
        """Return the description for ``raw``: explicit entry or derived."""
        _check_namespace(namespace)
        explicit = self._explicit(namespace)
        if raw in explicit:
            return explicit[raw]
        desc = derive_default_description(raw)
        _check_description(desc, f"label {raw!r}")
        return desc

    def unlabel(self, namespace: str, desc: str) -> tuple[str, bool]:
        """Invert ``describe``.

        Returns ``(raw, True)`` when ``desc`` is the description of a known
        label, else ``(desc, False)``: unknown text passes through so
        downstream comparison can still see what the generator produced.
        """
        _check_namespace(namespace)
        raw = self._inverse[namespace].get(desc)
        if raw is None:
            return desc, False
        return raw, True


def load_lexicon(path: str | Path) -> LabelLexicon:
    """Parse a lexicon file: ``namespace<TAB>raw<TAB>description`` lines.

    Blank lines and lines starting with ``#`` are skipped.  Errors carry
    the offending line number.
    """
    lexicon = LabelLexicon()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise LexiconError(f"{path}:{lineno}: expected 3 tab-separated fields")
        namespace, raw, desc = (part.strip() for part in parts)
        lexicon.add_entry(namespace, raw, desc, origin=f"{path}:{lineno}")
    return lexicon
