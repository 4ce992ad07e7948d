"""Corpus metrics: micro slot F1, intent accuracy, overall accuracy.

Slot F1 eliminates duplicate (slot, value) pairs on BOTH the prediction
and the gold side of every sample before counting, then micro-averages.
Comparison is on (raw slot label, value) with whitespace normalized to
single spaces; values stay case-sensitive.  Intent accuracy needs the
exact intent set; overall accuracy needs intents and the deduplicated
pair set both correct.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .bio import bio_to_pairs
from .dataset import RawSample, register_corpus_labels
from .lexicon import SLOT, LabelLexicon
from .spans import PairSpan, SlotValuePair


class EvaluationError(ValueError):
    """Raised for unusable prediction/gold record sets."""


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    pred_intents: frozenset[str]
    pred_pairs: PairSpan
    gold_intents: frozenset[str]
    gold_pairs: PairSpan


@dataclass(frozen=True)
class MetricsReport:
    slot_f1: float
    intent_acc: float
    overall_acc: float
    tp: int
    fp: int
    fn: int
    n_samples: int


def _norm(text: str) -> str:
    return " ".join(text.split())


def _pair_set(span: PairSpan) -> set[tuple[str, str]]:
    return {(_norm(pair.slot), _norm(pair.value)) for pair in span.pairs}


def _require_records(records: list[PredictionRecord]) -> None:
    if not records:
        raise EvaluationError("no records to score: empty corpus")


def slot_f1(records: list[PredictionRecord]) -> tuple[float, int, int, int]:
    """Micro F1 over deduplicated pair sets; 100.0 when nothing to find."""
    _require_records(records)
    tp = fp = fn = 0
    for record in records:
        pred = _pair_set(record.pred_pairs)
        gold = _pair_set(record.gold_pairs)
        tp += len(pred & gold)
        fp += len(pred - gold)
        fn += len(gold - pred)
    if tp == fp == fn == 0:
        return 100.0, 0, 0, 0
    return 100.0 * 2 * tp / (2 * tp + fp + fn), tp, fp, fn


def intent_acc(records: list[PredictionRecord]) -> float:
    """Percentage of samples whose intent sets match exactly."""
    _require_records(records)
    correct = sum(1 for r in records if r.pred_intents == r.gold_intents)
    return 100.0 * correct / len(records)


def overall_acc(records: list[PredictionRecord]) -> float:
    """Percentage of samples with intents AND pair sets both correct."""
    _require_records(records)
    correct = sum(
        1
        for r in records
        if r.pred_intents == r.gold_intents
        and _pair_set(r.pred_pairs) == _pair_set(r.gold_pairs)
    )
    return 100.0 * correct / len(records)


def _gold_pairs_raw(sample: RawSample, lexicon: LabelLexicon) -> PairSpan:
    described, _ = bio_to_pairs(sample.utt, sample.tags, lexicon)
    return PairSpan(
        tuple(
            SlotValuePair(lexicon.unlabel(SLOT, pair.slot)[0], pair.value)
            for pair in described.pairs
        )
    )


def _record_pairs(record: dict) -> PairSpan:
    try:
        return PairSpan(
            tuple(SlotValuePair(slot, value) for slot, value in record.get("pairs", []))
        )
    except (TypeError, ValueError) as exc:
        raise EvaluationError(
            f"{record.get('sample_id', '?')}: unusable pairs field: {exc}"
        ) from exc


def join_records(
    dump_records: list[dict],
    gold_samples: list[RawSample],
    lexicon: LabelLexicon,
) -> list[PredictionRecord]:
    """Join a prediction dump to gold samples, one record per sample.

    The join must be one-to-one: duplicate or unknown dump ids and gold
    samples absent from the dump are all errors.  A failure record (one
    carrying ``error``) joins as an empty prediction, scoring zero for
    its sample rather than hiding it.
    """
    if not gold_samples:
        raise EvaluationError("no records to score: empty corpus")
    register_corpus_labels(gold_samples, lexicon)
    gold_by_id: dict[str, RawSample] = {}
    for sample in gold_samples:
        if sample.sample_id in gold_by_id:
            raise EvaluationError(f"duplicate gold sample id {sample.sample_id!r}")
        gold_by_id[sample.sample_id] = sample
    pred_by_id: dict[str, dict] = {}
    for record in dump_records:
        sample_id = record["sample_id"]
        if sample_id in pred_by_id:
            raise EvaluationError(f"duplicate prediction for {sample_id!r}")
        if sample_id not in gold_by_id:
            raise EvaluationError(f"prediction for unknown sample {sample_id!r}")
        pred_by_id[sample_id] = record
    missing = [sid for sid in gold_by_id if sid not in pred_by_id]
    if missing:
        raise EvaluationError(f"dump is missing {len(missing)} sample(s): {missing}")
    joined = []
    for sample_id, sample in gold_by_id.items():
        record = pred_by_id[sample_id]
        if "error" in record:
            pred_intents: frozenset[str] = frozenset()
            pred_pairs = PairSpan(())
        else:
            pred_intents = frozenset(record.get("intents", []))
            pred_pairs = _record_pairs(record)
        joined.append(
            PredictionRecord(
                sample_id,
                pred_intents,
                pred_pairs,
                frozenset(sample.intents),
                _gold_pairs_raw(sample, lexicon),
            )
        )
    return joined


def evaluate_corpus(
    dump_records: list[dict],
    gold_samples: list[RawSample],
    lexicon: LabelLexicon,
) -> MetricsReport:
    """Score a prediction dump against its gold corpus."""
    records = join_records(dump_records, gold_samples, lexicon)
    f1, tp, fp, fn = slot_f1(records)
    return MetricsReport(
        slot_f1=f1,
        intent_acc=intent_acc(records),
        overall_acc=overall_acc(records),
        tp=tp,
        fp=fp,
        fn=fn,
        n_samples=len(records),
    )


def per_sample_rows(
    dump_records: list[dict],
    gold_samples: list[RawSample],
    lexicon: LabelLexicon,
) -> list[tuple[str, bool, bool, bool]]:
    """Per-sample correctness: (sample_id, intent_ok, slots_ok, overall_ok)."""
    rows = []
    for record in join_records(dump_records, gold_samples, lexicon):
        intent_ok = record.pred_intents == record.gold_intents
        slots_ok = _pair_set(record.pred_pairs) == _pair_set(record.gold_pairs)
        rows.append((record.sample_id, intent_ok, slots_ok, intent_ok and slots_ok))
    return rows


def write_per_sample_csv(
    dump_records: list[dict],
    gold_samples: list[RawSample],
    lexicon: LabelLexicon,
    path: str | Path,
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sample_id", "intent_ok", "slots_ok", "overall_ok"])
        for sample_id, intent_ok, slots_ok, overall_ok in per_sample_rows(
            dump_records, gold_samples, lexicon
        ):
            writer.writerow(
                [sample_id, int(intent_ok), int(slots_ok), int(overall_ok)]
            )


def write_metrics_csv(report: MetricsReport, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "value", "tp", "fp", "fn", "n"])
        writer.writerow(
            [
                "slot_f1",
                f"{report.slot_f1:.6f}",
                report.tp,
                report.fp,
                report.fn,
                report.n_samples,
            ]
        )
        writer.writerow(
            ["intent_acc", f"{report.intent_acc:.6f}", "", "", "", report.n_samples]
        )
        writer.writerow(
            ["overall_acc", f"{report.overall_acc:.6f}", "", "", "", report.n_samples]
        )


def format_report(report: MetricsReport) -> str:
    """Human-readable three-line summary."""
    return (
        f"slot_f1     {report.slot_f1:8.3f}  "
        f"(tp {report.tp}, fp {report.fp}, fn {report.fn})\n"
        f"intent_acc  {report.intent_acc:8.3f}\n"
        f"overall_acc {report.overall_acc:8.3f}  (n {report.n_samples})"
    )
