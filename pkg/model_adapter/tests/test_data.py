"""Reading and grouping the pipeline's line-delimited training records."""

import json

import pytest

from model_adapter.data import DataFormatError, Record, group_records, load_records


def _write(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def _row(sample_id="s-0", task="ID", prompt="transfer sentence to intents : hi", target="intent : flight"):
    return {"sample_id": sample_id, "task": task, "prompt": prompt, "target": target}


class TestLoadRecords:
    def test_reads_pipeline_output(self, tmp_path):
        import slupipe

        samples = slupipe.load_split(slupipe.mini_corpus_dir(), "test")
        lexicon = slupipe.register_corpus_labels(samples, slupipe.LabelLexicon())
        path = tmp_path / "test.jsonl"
        slupipe.write_examples(slupipe.expand_split(samples, lexicon), path)

        records = load_records(path)
        assert len(records) == 12
        assert {r.task for r in records} == {"ID", "SF", "SP"}
        assert all(r.prompt and r.target and r.sample_id for r in records)

    def test_field_values(self, tmp_path):
        path = tmp_path / "one.jsonl"
        _write(path, [_row()])
        record = load_records(path)[0]
        assert record == Record(
            sample_id="s-0",
            task="ID",
            prompt="transfer sentence to intents : hi",
            target="intent : flight",
        )

    @pytest.mark.parametrize(
        "row",
        [
            {"task": "ID", "prompt": "p", "target": "t"},  # no sample_id
            _row(task="XX"),
            _row(prompt=""),
            _row(target=""),
            {**_row(), "target": 7},
        ],
    )
    def test_bad_rows_rejected(self, tmp_path, row):
        path = tmp_path / "bad.jsonl"
        _write(path, [row])
        with pytest.raises(DataFormatError):
            load_records(path)

    def test_bad_json_line_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json\n", encoding="utf-8")
        with pytest.raises(DataFormatError) as err:
            load_records(path)
        assert ":1" in str(err.value)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_records(path)


class TestGroupRecords:
    def test_groups_by_sample_in_task_order(self, tmp_path):
        rows = [
            _row("a", "SP"), _row("b", "ID"), _row("a", "ID"),
            _row("b", "SP"), _row("a", "SF"), _row("b", "SF"),
        ]
        path = tmp_path / "mixed.jsonl"
        _write(path, rows)
        groups = group_records(load_records(path))
        assert [gid for gid, _ in groups] == ["a", "b"]
        for _, members in groups:
            assert [m.task for m in members] == ["ID", "SF", "SP"]

    def test_missing_member_rejected(self, tmp_path):
        path = tmp_path / "short.jsonl"
        _write(path, [_row("a", "ID"), _row("a", "SF")])
        with pytest.raises(DataFormatError) as err:
            group_records(load_records(path))
        assert "a" in str(err.value)

    def test_duplicate_task_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        _write(path, [_row("a", "ID"), _row("a", "ID"), _row("a", "SF")])
        with pytest.raises(DataFormatError):
            group_records(load_records(path))
