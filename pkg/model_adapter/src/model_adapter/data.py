"""The pipeline's line-delimited training records, read strictly.

Each line is a JSON object ``{"sample_id", "task", "prompt", "target"}``
with task one of ``ID`` / ``SF`` / ``SP``. That file format is the whole
interface to the dataset pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

TASKS = ("ID", "SF", "SP")


class DataFormatError(ValueError):
    """A training file violates the record format."""


@dataclass(frozen=True)
class Record:
    sample_id: str
    task: str
    prompt: str
    target: str


def load_records(path: str | Path) -> list[Record]:
    records: list[Record] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{lineno}: not JSON: {exc}") from exc
        if not isinstance(row, dict):
            raise DataFormatError(f"{path}:{lineno}: record must be an object")
        values = []
        for field in ("sample_id", "task", "prompt", "target"):
            value = row.get(field)
            if not isinstance(value, str) or not value:
                raise DataFormatError(
                    f"{path}:{lineno}: field {field!r} must be a non-empty string"
                )
            values.append(value)
        sample_id, task, prompt, target = values
        if task not in TASKS:
            raise DataFormatError(
                f"{path}:{lineno}: task {task!r} not one of {TASKS}"
            )
        records.append(Record(sample_id, task, prompt, target))
    if not records:
        raise DataFormatError(f"{path}: no records")
    return records


def group_records(
    records: list[Record],
) -> list[tuple[str, tuple[Record, Record, Record]]]:
    """Collect each sample's three per-task records, ordered ID, SF, SP.

    Works on both emitted layouts: grouping is by sample_id, and group
    order follows first appearance. Every sample must have exactly one
    record per task.
    """
    by_id: dict[str, dict[str, Record]] = {}
    for record in records:
        tasks = by_id.setdefault(record.sample_id, {})
        if record.task in tasks:
            raise DataFormatError(
                f"sample {record.sample_id!r} has more than one {record.task} record"
            )
        tasks[record.task] = record
    groups = []
    for sample_id, tasks in by_id.items():
        missing = [task for task in TASKS if task not in tasks]
        if missing:
            raise DataFormatError(
                f"sample {sample_id!r} is missing {', '.join(missing)} record(s)"
            )
        groups.append((sample_id, tuple(tasks[task] for task in TASKS)))
    return groups
