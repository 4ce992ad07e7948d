"""Locations of the bundled miniature corpus and its lexicon file.

A 20-sample airline-domain corpus ships with the package so the full
pipeline can run and be tested without downloading the real corpora.
"""

from pathlib import Path

_DATA = Path(__file__).parent / "data"

MINI_COUNTS = {"train": 12, "dev": 4, "test": 4}


def mini_corpus_dir() -> Path:
    return _DATA / "mini_atis"


def mini_lexicon_path() -> Path:
    return _DATA / "lexicons" / "mini_atis.tsv"
