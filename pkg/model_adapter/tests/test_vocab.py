"""Word-level vocabulary: ids, round trips, persistence."""

import pytest

from model_adapter.vocab import EOS_ID, PAD_ID, UNK_ID, Vocabulary


class TestBuild:
    def test_specials_come_first(self):
        vocab = Vocabulary.build(["a b", "b c"])
        assert vocab.tokens[:3] == ("<pad>", "</s>", "<unk>")
        assert (PAD_ID, EOS_ID, UNK_ID) == (0, 1, 2)

    def test_words_sorted_and_unique(self):
        vocab = Vocabulary.build(["b a", "a c"])
        assert vocab.tokens[3:] == ("a", "b", "c")
        assert len(vocab) == 6

    def test_order_of_input_does_not_matter(self):
        assert Vocabulary.build(["x y", "z"]).tokens == Vocabulary.build(
            ["z", "y x"]
        ).tokens

    def test_special_lookalike_token_not_duplicated(self):
        vocab = Vocabulary.build(["<unk> word"])
        assert vocab.tokens.count("<unk>") == 1
        assert vocab.encode("<unk>", add_eos=False) == [UNK_ID]

    def test_empty_corpus_is_just_specials(self):
        assert len(Vocabulary.build([])) == 3


class TestEncodeDecode:
    @pytest.fixture
    def vocab(self):
        return Vocabulary.build(["show flights from denver"])

    def test_encode_known_words(self, vocab):
        ids = vocab.encode("show flights", add_eos=False)
        assert ids == [vocab.index["show"], vocab.index["flights"]]

    def test_encode_appends_eos_by_default(self, vocab):
        assert vocab.encode("show")[-1] == EOS_ID

    def test_unknown_word_maps_to_unk(self, vocab):
        assert vocab.encode("zzz", add_eos=False) == [UNK_ID]

    def test_decode_stops_at_eos_and_skips_pad(self, vocab):
        ids = [PAD_ID] + vocab.encode("show flights") + vocab.encode("denver")
        assert vocab.decode(ids) == "show flights"

    def test_decode_without_eos_reads_everything(self, vocab):
        assert vocab.decode(vocab.encode("from denver", add_eos=False)) == "from denver"

    def test_round_trip(self, vocab):
        text = "show flights from denver"
        assert vocab.decode(vocab.encode(text)) == text

    def test_decode_renders_unk_placeholder(self, vocab):
        assert vocab.decode([UNK_ID]) == "<unk>"

    def test_encode_rejects_blank_text(self, vocab):
        with pytest.raises(ValueError):
            vocab.encode("   ")


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        vocab = Vocabulary.build(["alpha beta", "gamma"])
        path = tmp_path / "vocab.json"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.tokens == vocab.tokens
        assert loaded.index == vocab.index

    def test_load_rejects_bad_specials(self, tmp_path):
        path = tmp_path / "vocab.json"
        path.write_text('{"tokens": ["a", "b"]}', encoding="utf-8")
        with pytest.raises(ValueError):
            Vocabulary.load(path)
