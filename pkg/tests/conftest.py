import pytest

from slupipe.bundled import mini_corpus_dir
from slupipe.dataset import load_corpus, register_corpus_labels
from slupipe.lexicon import LabelLexicon


def _load_split(name):
    samples = load_corpus(mini_corpus_dir() / f"{name}.txt")
    lexicon = LabelLexicon()
    register_corpus_labels(samples, lexicon)
    return samples, lexicon


@pytest.fixture
def mini_test():
    return _load_split("test")


@pytest.fixture
def mini_dev():
    return _load_split("dev")


@pytest.fixture
def mini_train():
    return _load_split("train")
