"""Word-level whitespace vocabulary with fixed special tokens.

The dataset's prompts and targets are plain lowercase words and
punctuation-free delimiters, so whitespace tokenization is lossless on
them: ``decode(encode(text)) == text`` for any text whose words are in
the vocabulary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

SPECIALS = ("<pad>", "</s>", "<unk>")
PAD_ID = 0
EOS_ID = 1
UNK_ID = 2


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    index: dict[str, int]

    @classmethod
    def build(cls, texts) -> "Vocabulary":
        """Collect every whitespace-separated word, sorted for determinism."""
        words = {word for text in texts for word in text.split()}
        tokens = SPECIALS + tuple(sorted(words - set(SPECIALS)))
        return cls(tokens=tokens, index={tok: i for i, tok in enumerate(tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, text: str, add_eos: bool = True) -> list[int]:
        words = text.split()
        if not words:
            raise ValueError("cannot encode blank text")
        ids = [self.index.get(word, UNK_ID) for word in words]
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids) -> str:
        """Words joined by single spaces, stopping at EOS, skipping padding."""
        words = []
        for token_id in ids:
            if token_id == EOS_ID:
                break
            if token_id == PAD_ID or not 0 <= token_id < len(self.tokens):
                continue
            words.append(self.tokens[token_id])
        return " ".join(words)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps({"tokens": list(self.tokens)}, ensure_ascii=False),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        tokens = tuple(payload.get("tokens", ()))
        if tokens[: len(SPECIALS)] != SPECIALS:
            raise ValueError(f"{path}: vocabulary must start with {SPECIALS}")
        return cls(tokens=tokens, index={tok: i for i, tok in enumerate(tokens)})
