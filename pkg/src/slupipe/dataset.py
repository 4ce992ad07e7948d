"""Corpus loading and emission of text-generation training examples.

Corpus file grammar: one sample is a run of ``token<SPACE>tag`` lines
closed by a line holding the intent labels joined by ``#``; samples are
separated by blank lines.  Each sample expands into three training
examples, one per sub-task, either shuffled flat (split-loss layout) or
kept grouped per sample (weighted-loss layout).  Examples are written as
line-delimited JSON records ``{sample_id, task, prompt, target}``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .bio import BioError, BioSequence, Utterance, bio_to_pairs
from .lexicon import INTENT, SLOT, LabelLexicon
from .prompts import Prompt, TaskKind, build_ablated_prompt, build_prompt
from .spans import (
    IntentSpan,
    SlotSpan,
    serialize_intents,
    serialize_pairs,
    serialize_slots,
)

SPLITS = ("train", "dev", "test")

_RECORD_FIELDS = ("sample_id", "task", "prompt", "target")


class CorpusError(ValueError):
    """Raised for corpus or dataset files that violate their grammar."""


@dataclass(frozen=True)
class RawSample:
    sample_id: str
    utt: Utterance
    tags: BioSequence
    intents: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "intents", tuple(self.intents))
        if not self.intents or any(not label for label in self.intents):
            raise CorpusError(f"{self.sample_id}: needs at least one non-empty intent")
        if len(self.tags.tags) != len(self.utt.tokens):
            raise CorpusError(
                f"{self.sample_id}: {len(self.tags.tags)} tags "
                f"for {len(self.utt.tokens)} tokens"
            )


@dataclass(frozen=True)
class TrainingExample:
    sample_id: str
    task: TaskKind
    prompt: Prompt
    target: str


@dataclass(frozen=True)
class GoldTargets:
    id_target: str
    sf_target: str
    sp_target: str


_TAG_KINDS = "BI"


def _valid_tag(tag: str) -> bool:
    return tag == "O" or (len(tag) > 2 and tag[0] in _TAG_KINDS and tag[1] == "-")


def load_corpus(path: str | Path, id_prefix: str | None = None) -> list[RawSample]:
    """Parse one corpus file into samples, in file order.

    Sample ids are ``<prefix>-<index>`` with the file stem as the default
    prefix, so ``test.txt`` yields ``test-0000`` onward.
    """
    path = Path(path)
    prefix = path.stem if id_prefix is None else id_prefix
    samples: list[RawSample] = []
    tokens: list[str] = []
    tags: list[str] = []

    def close_sample(intent_line: str, lineno: int) -> None:
        intents = intent_line.split("#")
        if any(not label for label in intents):
            raise CorpusError(f"{path}:{lineno}: empty intent label in {intent_line!r}")
        if not tokens:
            raise CorpusError(f"{path}:{lineno}: intent line without token lines")
        try:
            sample = RawSample(
                f"{prefix}-{len(samples):04d}",
                Utterance(tuple(tokens)),
                BioSequence(tuple(tags)),
                tuple(intents),
            )
        except BioError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
        samples.append(sample)
        tokens.clear()
        tags.clear()

    for lineno, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        stripped = line.strip()
        if not stripped:
            if tokens:
                raise CorpusError(
                    f"{path}:{lineno}: blank line inside a sample (intent line missing)"
                )
            continue
        parts = stripped.split()
        if len(parts) == 1:
            close_sample(parts[0], lineno)
        elif len(parts) == 2:
            token, tag = parts
            if not _valid_tag(tag):
                raise CorpusError(f"{path}:{lineno}: malformed tag {tag!r}")
            tokens.append(token)
            tags.append(tag)
        else:
            raise CorpusError(
                f"{path}:{lineno}: expected 'token tag' or an intent line, "
                f"got {stripped!r}"
            )
    if tokens:
        raise CorpusError(f"{path}: file ended inside a sample (intent line missing)")
    return samples


def load_split(corpus_dir: str | Path, split: str) -> list[RawSample]:
    """Load ``<corpus_dir>/<split>.txt`` for split train, dev, or test."""
    if split not in SPLITS:
        raise CorpusError(f"unknown split {split!r}; expected one of {SPLITS}")
    path = Path(corpus_dir) / f"{split}.txt"
    if not path.is_file():
        raise CorpusError(f"missing corpus file {path}")
    return load_corpus(path)


def corpus_counts(corpus_dir: str | Path) -> dict[str, int]:
    """Sample count per split file present under ``corpus_dir``."""
    counts = {}
    for split in SPLITS:
        path = Path(corpus_dir) / f"{split}.txt"
        if path.is_file():
            counts[split] = len(load_corpus(path))
    if not counts:
        raise CorpusError(f"no train/dev/test files under {corpus_dir}")
    return counts


def register_corpus_labels(
    samples: list[RawSample], lexicon: LabelLexicon
) -> LabelLexicon:
    """Register every intent and slot label so unlabel can invert them."""
    for sample in samples:
        for intent in sample.intents:
            lexicon.register_label(INTENT, intent)
        for tag in sample.tags.tags:
            if tag != "O":
                lexicon.register_label(SLOT, tag[2:])
    return lexicon


def gold_intent_span(sample: RawSample, lexicon: LabelLexicon) -> IntentSpan:
    """The sample's intents as descriptions, file order preserved."""
    return IntentSpan(tuple(lexicon.describe(INTENT, raw) for raw in sample.intents))


def make_gold_targets(sample: RawSample, lexicon: LabelLexicon) -> GoldTargets:
    """Render the three generation targets for one sample."""
    id_target = serialize_intents(gold_intent_span(sample, lexicon))
    pairs, _ = bio_to_pairs(sample.utt, sample.tags, lexicon)
    sf_target = serialize_pairs(pairs)
    slots = tuple(dict.fromkeys(pair.slot for pair in pairs.pairs))
    sp_target = serialize_slots(SlotSpan(slots))
    return GoldTargets(id_target, sf_target, sp_target)


def _three_examples(
    sample: RawSample, lexicon: LabelLexicon, sig_mode: bool
) -> tuple[TrainingExample, TrainingExample, TrainingExample]:
    gold = make_gold_targets(sample, lexicon)
    id_prompt = build_prompt(TaskKind.INTENT_DETECTION, sample.utt)
    if sig_mode:
        intents = gold_intent_span(sample, lexicon)
        sf_prompt = build_prompt(TaskKind.SLOT_FILLING, sample.utt, intents)
        sp_prompt = build_prompt(TaskKind.SLOT_PREDICTION, sample.utt, intents)
    else:
        sf_prompt = build_ablated_prompt(TaskKind.SLOT_FILLING, sample.utt)
        sp_prompt = build_ablated_prompt(TaskKind.SLOT_PREDICTION, sample.utt)
    sid = sample.sample_id
    return (
        TrainingExample(sid, TaskKind.INTENT_DETECTION, id_prompt, gold.id_target),
        TrainingExample(sid, TaskKind.SLOT_FILLING, sf_prompt, gold.sf_target),
        TrainingExample(sid, TaskKind.SLOT_PREDICTION, sp_prompt, gold.sp_target),
    )


def expand_split(
    samples: list[RawSample],
    lexicon: LabelLexicon,
    sig_mode: bool = True,
    seed: int | None = None,
) -> list[TrainingExample]:
    """Split every sample into its three per-task examples.

    Training prompts embed the GOLD intents when ``sig_mode`` is on.  With
    a seed, the flat list is shuffled deterministically; without one, it
    stays in sample order (intent, pairs, slots per sample).
    """
    examples = [
        example
        for sample in samples
        for example in _three_examples(sample, lexicon, sig_mode)
    ]
    if seed is not None:
        random.Random(seed).shuffle(examples)
    return examples


def group_for_weighted(
    samples: list[RawSample], lexicon: LabelLexicon, sig_mode: bool = True
) -> list[tuple[str, tuple[TrainingExample, TrainingExample, TrainingExample]]]:
    """Keep each sample's three examples co-batched for per-sample weighting."""
    return [
        (sample.sample_id, _three_examples(sample, lexicon, sig_mode))
        for sample in samples
    ]


def write_examples(examples: list[TrainingExample], path: str | Path) -> None:
    """Write examples as line-delimited JSON with a stable field order."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for example in examples:
            record = {
                "sample_id": example.sample_id,
                "task": example.task.value,
                "prompt": example.prompt.text,
                "target": example.target,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_examples(path: str | Path) -> list[TrainingExample]:
    """Read back a file written by ``write_examples``."""
    examples: list[TrainingExample] = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: bad record: {exc}") from exc
        if not isinstance(record, dict):
            raise CorpusError(f"{path}:{lineno}: record is not an object")
        missing = [field for field in _RECORD_FIELDS if field not in record]
        if missing:
            raise CorpusError(f"{path}:{lineno}: missing fields {missing}")
        try:
            task = TaskKind(record["task"])
        except ValueError as exc:
            raise CorpusError(
                f"{path}:{lineno}: unknown task {record['task']!r}"
            ) from exc
        examples.append(
            TrainingExample(
                record["sample_id"], task, Prompt(record["prompt"], task), record["target"]
            )
        )
    return examples
