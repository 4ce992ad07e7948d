"""Staged inference: detect intents first, then run the slot stages.

One sample flows as prompt → intent generation → parse → slot-filling
(and optionally slot-prediction) prompts embedding the parsed intents →
generation → parse.  The two slot generations run concurrently; results
are keyed by task, so arrival order never changes the outcome.  Corpus
runs execute samples in a bounded thread pool, and a backend failure on
one sample becomes a failure record without touching the others.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backends import BackendError, GenerationBackend, GenerationRequest
from .bio import Utterance
from .dataset import CorpusError, RawSample, gold_intent_span
from .lexicon import INTENT, SLOT, LabelLexicon
from .prompts import Prompt, TaskKind, build_ablated_prompt, build_prompt
from .spans import (
    IntentSpan,
    PairSpan,
    SlotSpan,
    parse_intents,
    parse_pairs,
    parse_slots,
)


@dataclass(frozen=True)
class PipelineOptions:
    sig: bool = True
    run_sp: bool = False
    max_new_tokens: int = 128


@dataclass(frozen=True)
class Diagnostics:
    malformed: dict[str, int]
    latency_s: dict[str, float]


@dataclass(frozen=True)
class SluPrediction:
    intents: IntentSpan
    pairs: PairSpan
    slots: SlotSpan | None
    diagnostics: Diagnostics


@dataclass(frozen=True)
class SampleResult:
    sample_id: str
    prediction: SluPrediction | None = None
    error: str | None = None


def _generate(
    backend: GenerationBackend, prompt: Prompt, options: PipelineOptions
) -> tuple[str, float]:
    start = time.perf_counter()
    response = backend.generate(GenerationRequest(prompt.text, options.max_new_tokens))
    return response.text, time.perf_counter() - start


def _slot_stages(
    utt: Utterance,
    intents: IntentSpan,
    backend: GenerationBackend,
    options: PipelineOptions,
    malformed: dict[str, int],
    latency_s: dict[str, float],
) -> SluPrediction:
    if options.sig:
        sf_prompt = build_prompt(TaskKind.SLOT_FILLING, utt, intents)
        sp_prompt = (
            build_prompt(TaskKind.SLOT_PREDICTION, utt, intents)
            if options.run_sp
            else None
        )
    else:
        sf_prompt = build_ablated_prompt(TaskKind.SLOT_FILLING, utt)
        sp_prompt = (
            build_ablated_prompt(TaskKind.SLOT_PREDICTION, utt)
            if options.run_sp
            else None
        )
    if sp_prompt is None:
        sf_text, latency_s["SF"] = _generate(backend, sf_prompt, options)
        slots = None
    else:
        with ThreadPoolExecutor(max_workers=2) as pool:
            sf_future = pool.submit(_generate, backend, sf_prompt, options)
            sp_future = pool.submit(_generate, backend, sp_prompt, options)
            sf_text, latency_s["SF"] = sf_future.result()
            sp_text, latency_s["SP"] = sp_future.result()
        slots, malformed["SP"] = parse_slots(sp_text)
    pairs, malformed["SF"] = parse_pairs(sf_text)
    return SluPrediction(intents, pairs, slots, Diagnostics(malformed, latency_s))


def run_pipeline(
    utt: Utterance,
    backend: GenerationBackend,
    options: PipelineOptions = PipelineOptions(),
) -> SluPrediction:
    """Full staged run: predicted intents steer the slot prompts."""
    malformed: dict[str, int] = {}
    latency_s: dict[str, float] = {}
    id_prompt = build_prompt(TaskKind.INTENT_DETECTION, utt)
    id_text, latency_s["ID"] = _generate(backend, id_prompt, options)
    intents, malformed["ID"] = parse_intents(id_text)
    return _slot_stages(utt, intents, backend, options, malformed, latency_s)


def run_pipeline_gold_intents(
    utt: Utterance,
    gold: IntentSpan,
    backend: GenerationBackend,
    options: PipelineOptions = PipelineOptions(),
) -> SluPrediction:
    """As run_pipeline, but the intent stage is replaced by given intents."""
    return _slot_stages(utt, gold, backend, options, {"ID": 0}, {})


def run_corpus(
    samples: list[RawSample],
    backend: GenerationBackend,
    lexicon: LabelLexicon,
    options: PipelineOptions = PipelineOptions(),
    parallelism: int = 1,
    use_gold_intents: bool = False,
) -> list[SampleResult]:
    """Run the pipeline over a corpus, isolating per-sample backend failures.

    Results come back in sample order.  Only backend errors become failure
    records; anything else is a bug and propagates.
    """

    def one(sample: RawSample) -> SampleResult:
        try:
            if use_gold_intents:
                prediction = run_pipeline_gold_intents(
                    sample.utt, gold_intent_span(sample, lexicon), backend, options
                )
            else:
                prediction = run_pipeline(sample.utt, backend, options)
        except BackendError as exc:
            return SampleResult(sample.sample_id, error=f"{type(exc).__name__}: {exc}")
        return SampleResult(sample.sample_id, prediction=prediction)

    if parallelism <= 1:
        return [one(sample) for sample in samples]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, samples))


def write_predictions(
    results: list[SampleResult], lexicon: LabelLexicon, path: str | Path
) -> None:
    """Dump results as line-delimited JSON, mapping descriptions back to raw labels."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for result in results:
            if result.error is not None:
                record = {"sample_id": result.sample_id, "error": result.error}
            else:
                prediction = result.prediction
                assert prediction is not None
                record = {
                    "sample_id": result.sample_id,
                    "intents": [
                        lexicon.unlabel(INTENT, desc)[0]
                        for desc in prediction.intents.intents
                    ],
                    "pairs": [
                        [lexicon.unlabel(SLOT, pair.slot)[0], pair.value]
                        for pair in prediction.pairs.pairs
                    ],
                    "slots": (
                        None
                        if prediction.slots is None
                        else [
                            lexicon.unlabel(SLOT, slot)[0]
                            for slot in prediction.slots.slots
                        ]
                    ),
                    "diagnostics": {
                        "malformed": prediction.diagnostics.malformed,
                        "latency_s": prediction.diagnostics.latency_s,
                    },
                }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_predictions(path: str | Path) -> list[dict]:
    """Read a prediction dump back as one record per line."""
    records = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: bad record: {exc}") from exc
        if not isinstance(record, dict) or "sample_id" not in record:
            raise CorpusError(f"{path}:{lineno}: record needs a sample_id")
        records.append(record)
    return records
