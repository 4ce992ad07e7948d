"""CLI behavior: training runs end to end, errors map to exit codes."""

import json

import pytest
import slupipe

from model_adapter.cli import main


@pytest.fixture(scope="module")
def train_file(tmp_path_factory):
    samples = slupipe.load_split(slupipe.mini_corpus_dir(), "test")
    lexicon = slupipe.register_corpus_labels(samples, slupipe.LabelLexicon())
    path = tmp_path_factory.mktemp("cli") / "train.jsonl"
    slupipe.write_examples(slupipe.expand_split(samples, lexicon), path)
    return path


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestTrain:
    def test_trains_and_reports_epochs(self, capsys, tmp_path, train_file):
        out_dir = tmp_path / "ckpt"
        code, out, _ = _run(
            capsys,
            "train", "--train", str(train_file), "--out", str(out_dir),
            "--epochs", "2", "--lr", "1e-3", "--seed", "1",
        )
        assert code == 0
        assert out.count("epoch ") == 2
        assert "ID" in out and "SF" in out and "SP" in out
        assert "checkpoint written to" in out
        for name in ("model.pt", "vocab.json", "adapter_config.json"):
            assert (out_dir / name).exists()

    def test_weighted_mode_with_dev(self, capsys, tmp_path, train_file):
        code, out, _ = _run(
            capsys,
            "train", "--train", str(train_file), "--out", str(tmp_path / "c"),
            "--epochs", "1", "--loss", "weighted", "--weights", "1,2,1",
            "--dev", str(train_file), "--lr", "1e-3",
        )
        assert code == 0
        assert "dev overall acc" in out
        assert "best epoch" in out
        meta = json.loads((tmp_path / "c" / "adapter_config.json").read_text())
        assert meta["best_epoch"] is not None

    def test_missing_required_flag_is_usage_error(self, capsys, tmp_path):
        code, _, err = _run(capsys, "train", "--out", str(tmp_path / "c"))
        assert code == 1
        assert "train" in err

    def test_bad_weights_are_usage_error(self, capsys, tmp_path, train_file):
        code, _, err = _run(
            capsys,
            "train", "--train", str(train_file), "--out", str(tmp_path / "c"),
            "--weights", "1,2",
        )
        assert code == 1
        assert "weights" in err

    def test_bad_data_file_is_data_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n", encoding="utf-8")
        code, _, err = _run(
            capsys, "train", "--train", str(bad), "--out", str(tmp_path / "c")
        )
        assert code == 2
        assert "error" in err

    def test_invalid_hyperparameter_is_data_error(self, capsys, tmp_path, train_file):
        code, _, err = _run(
            capsys,
            "train", "--train", str(train_file), "--out", str(tmp_path / "c"),
            "--epochs", "-3",
        )
        assert code == 2
        assert "epochs" in err


class TestArgumentHandling:
    def test_no_command_is_usage_error(self, capsys):
        code, _, _ = _run(capsys)
        assert code == 1

    def test_help_exits_zero(self, capsys):
        code, out, _ = _run(capsys, "--help")
        assert code == 0
        assert "train" in out and "serve" in out

    def test_serve_requires_checkpoint(self, capsys):
        code, _, err = _run(capsys, "serve")
        assert code == 1
        assert "checkpoint" in err
