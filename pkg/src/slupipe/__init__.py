"""Prompt-based pipeline toolkit for multi-intent spoken language understanding.

The package turns BIO-tagged corpora into text-generation training data,
builds staged prompts, drives pluggable generation backends, and scores
predictions with slot F1 and exact-set accuracies.
"""

from .backends import (
    AmbiguousCorpusError,
    BackendError,
    DeadlineExceededError,
    GenerationBackend,
    GenerationRequest,
    GenerationResponse,
    HttpBackend,
    OracleBackend,
    OracleMissError,
    ProtocolError,
    ServerStatusError,
    TransportError,
    verify_protocol,
)
from .bio import BioError, BioSequence, Utterance, bio_to_pairs, pairs_to_bio
from .bundled import MINI_COUNTS, mini_corpus_dir, mini_lexicon_path
from .dataset import (
    SPLITS,
    CorpusError,
    GoldTargets,
    RawSample,
    TrainingExample,
    corpus_counts,
    expand_split,
    gold_intent_span,
    group_for_weighted,
    load_corpus,
    load_split,
    make_gold_targets,
    read_examples,
    register_corpus_labels,
    write_examples,
)
from .lexicon import (
    INTENT,
    SLOT,
    LabelLexicon,
    LexiconError,
    derive_default_description,
    load_lexicon,
)
from .losses import (
    LossError,
    TargetSequence,
    WeightedLossConfig,
    combine_weighted,
    nll,
    select_split_loss,
)
from .metrics import (
    EvaluationError,
    MetricsReport,
    PredictionRecord,
    evaluate_corpus,
    format_report,
    intent_acc,
    join_records,
    overall_acc,
    per_sample_rows,
    slot_f1,
    write_metrics_csv,
    write_per_sample_csv,
)
from .orchestrator import (
    Diagnostics,
    PipelineOptions,
    SampleResult,
    SluPrediction,
    read_predictions,
    run_corpus,
    run_pipeline,
    run_pipeline_gold_intents,
    write_predictions,
)
from .prompts import (
    ID_PREFIX,
    Prompt,
    PromptError,
    TaskKind,
    build_ablated_prompt,
    build_prompt,
    classify_prompt,
)
from .spans import (
    EMPTY_SPAN,
    ITEM_SEP,
    KV_SEP,
    IntentSpan,
    PairSpan,
    SlotSpan,
    SlotValuePair,
    parse_intents,
    parse_pairs,
    parse_slots,
    serialize_intents,
    serialize_pairs,
    serialize_slots,
)

__version__ = "0.1.0"
