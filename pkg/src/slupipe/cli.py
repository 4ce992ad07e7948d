"""Command-line front end: build datasets, run inference, score dumps.

Exit codes: 0 success, 1 usage problem, 2 data problem, 3 backend problem.
Every flag may also come from a ``--config`` JSON object; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import BackendError, HttpBackend, OracleBackend
from .bundled import mini_corpus_dir
from .dataset import (
    SPLITS,
    CorpusError,
    RawSample,
    expand_split,
    gold_intent_span,
    group_for_weighted,
    load_split,
    register_corpus_labels,
    write_examples,
)
from .lexicon import LabelLexicon, LexiconError, load_lexicon
from .metrics import (
    EvaluationError,
    evaluate_corpus,
    format_report,
    write_metrics_csv,
    write_per_sample_csv,
)
from .orchestrator import (
    PipelineOptions,
    read_predictions,
    run_corpus,
    write_predictions,
)
from .prompts import TaskKind, build_ablated_prompt, build_prompt


class UsageError(ValueError):
    """A problem with how the command was invoked (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        raise UsageError(message)


_DEFAULTS: dict[str, dict] = {
    "build-dataset": {
        "corpus": None,
        "split": None,
        "lexicon": None,
        "layout": None,
        "sig": True,
        "seed": None,
        "out": None,
    },
    "infer": {
        "corpus": None,
        "split": "test",
        "lexicon": None,
        "backend": "oracle",
        "sig": True,
        "run_sp": False,
        "parallelism": 1,
        "out": None,
        "dry_run": False,
    },
    "evaluate": {
        "pred": None,
        "corpus": None,
        "split": "test",
        "lexicon": None,
        "out": None,
    },
}

_TYPES: dict[str, type] = {
    "corpus": str,
    "split": str,
    "lexicon": str,
    "layout": str,
    "backend": str,
    "out": str,
    "pred": str,
    "sig": bool,
    "run_sp": bool,
    "dry_run": bool,
    "seed": int,
    "parallelism": int,
}


def _load_config(path: str) -> dict:
    try:
        loaded = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise UsageError("config file must hold a single JSON object")
    return loaded


def _merge(args: argparse.Namespace) -> dict:
    """Layer the effective options: explicit flag > config file > default."""
    defaults = _DEFAULTS[args.command]
    file_values: dict = {}
    if args.config is not None:
        for key, value in _load_config(args.config).items():
            dest = key.replace("-", "_")
            if dest not in defaults:
                raise UsageError(f"config key {key!r} is not an {args.command} flag")
            expected = _TYPES[dest]
            bad_bool = expected is int and isinstance(value, bool)
            if bad_bool or not isinstance(value, expected):
                raise UsageError(f"config key {key!r} must be a {expected.__name__}")
            file_values[dest] = value
    merged = {}
    for key, default in defaults.items():
        explicit = getattr(args, key)
        if explicit is not None:
            merged[key] = explicit
        elif key in file_values:
            merged[key] = file_values[key]
        else:
            merged[key] = default
    return merged


def _validate(merged: dict) -> None:
    split = merged.get("split")
    if split is not None and split not in SPLITS:
        raise UsageError(f"--split must be one of: {', '.join(SPLITS)}")
    layout = merged.get("layout")
    if layout is not None and layout not in ("split", "weighted"):
        raise UsageError("--layout must be 'split' or 'weighted'")
    seed = merged.get("seed")
    if seed is not None and seed < 0:
        raise UsageError("--seed must be a non-negative integer")
    parallelism = merged.get("parallelism")
    if parallelism is not None and parallelism < 1:
        raise UsageError("--parallelism must be at least 1")


def _resolve_corpus_dir(merged: dict) -> Path:
    if merged["corpus"] is not None:
        return Path(merged["corpus"])
    print("note: no --corpus given; using the bundled mini corpus", file=sys.stderr)
    return mini_corpus_dir()


def _resolve_lexicon(merged: dict) -> LabelLexicon:
    if merged["lexicon"] is not None:
        return load_lexicon(merged["lexicon"])
    print(
        "note: no --lexicon given; deriving descriptions from raw labels",
        file=sys.stderr,
    )
    return LabelLexicon()


def _make_backend(spec: str, samples: list[RawSample], lexicon: LabelLexicon):
    if spec == "oracle":
        return OracleBackend(samples, lexicon)
    if spec.startswith(("http://", "https://")):
        return HttpBackend(spec)
    raise UsageError(f"unknown backend {spec!r}: use 'oracle' or an http(s) URL")


def cmd_build_dataset(merged: dict) -> int:
    if merged["out"] is None:
        raise UsageError("--out directory is required for build-dataset")
    corpus_dir = _resolve_corpus_dir(merged)
    if merged["split"] is not None:
        splits = [merged["split"]]
    else:
        splits = [s for s in SPLITS if (corpus_dir / f"{s}.txt").exists()]
        if not splits:
            raise CorpusError(f"no split files found under {corpus_dir}")
    layouts = [merged["layout"]] if merged["layout"] else ["split", "weighted"]
    lexicon = _resolve_lexicon(merged)
    out_dir = Path(merged["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    for split in splits:
        samples = load_split(corpus_dir, split)
        register_corpus_labels(samples, lexicon)
        for layout in layouts:
            if layout == "split":
                examples = expand_split(
                    samples, lexicon, sig_mode=merged["sig"], seed=merged["seed"]
                )
            else:
                examples = [
                    example
                    for _, group in group_for_weighted(
                        samples, lexicon, sig_mode=merged["sig"]
                    )
                    for example in group
                ]
            write_examples(examples, out_dir / f"{split}.{layout}.jsonl")
        print(f"{split}: {len(samples)} samples, {3 * len(samples)} examples per layout")
    return 0


def _print_prompt_preview(
    samples: list[RawSample], lexicon: LabelLexicon, merged: dict
) -> None:
    slot_tasks = [TaskKind.SLOT_FILLING]
    if merged["run_sp"]:
        slot_tasks.append(TaskKind.SLOT_PREDICTION)
    for sample in samples:
        gold = gold_intent_span(sample, lexicon)
        id_prompt = build_prompt(TaskKind.INTENT_DETECTION, sample.utt)
        print(f"{sample.sample_id}\t{TaskKind.INTENT_DETECTION.value}\t{id_prompt.text}")
        for task in slot_tasks:
            if merged["sig"]:
                prompt = build_prompt(task, sample.utt, gold)
            else:
                prompt = build_ablated_prompt(task, sample.utt)
            print(f"{sample.sample_id}\t{task.value}\t{prompt.text}")


def cmd_infer(merged: dict) -> int:
    corpus_dir = _resolve_corpus_dir(merged)
    samples = load_split(corpus_dir, merged["split"])
    lexicon = _resolve_lexicon(merged)
    register_corpus_labels(samples, lexicon)
    if merged["dry_run"]:
        _print_prompt_preview(samples, lexicon, merged)
        return 0
    if merged["out"] is None:
        raise UsageError("--out dump file is required for infer (unless --dry-run)")
    backend = _make_backend(merged["backend"], samples, lexicon)
    options = PipelineOptions(sig=merged["sig"], run_sp=bool(merged["run_sp"]))
    results = run_corpus(
        samples, backend, lexicon, options, parallelism=merged["parallelism"]
    )
    write_predictions(results, lexicon, merged["out"])
    failed = sum(1 for result in results if result.error is not None)
    print(f"{len(results) - failed} ok, {failed} failed -> {merged['out']}")
    if failed:
        for result in results:
            if result.error is not None:
                print(f"failed {result.sample_id}: {result.error}", file=sys.stderr)
        if failed == len(results):
            print("error: every sample failed; backend unusable", file=sys.stderr)
            return 3
    return 0


def cmd_evaluate(merged: dict) -> int:
    if merged["pred"] is None:
        raise UsageError("--pred dump file is required for evaluate")
    records = read_predictions(merged["pred"])
    if not records:
        raise EvaluationError(f"prediction dump {merged['pred']} is empty")
    corpus_dir = _resolve_corpus_dir(merged)
    samples = load_split(corpus_dir, merged["split"])
    lexicon = _resolve_lexicon(merged)
    report = evaluate_corpus(records, samples, lexicon)
    print(format_report(report))
    if merged["out"] is not None:
        out_dir = Path(merged["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(report, out_dir / "metrics.csv")
        write_per_sample_csv(records, samples, lexicon, out_dir / "per_sample.csv")
        print(f"wrote {out_dir / 'metrics.csv'} and {out_dir / 'per_sample.csv'}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--corpus",
        help="directory holding <split>.txt files (default: bundled mini corpus)",
    )
    parser.add_argument("--split", choices=SPLITS, help="which corpus split to use")
    parser.add_argument(
        "--lexicon",
        help="label description file (default: derive descriptions from raw labels)",
    )
    parser.add_argument(
        "--config", help="JSON file supplying any flag; explicit flags win"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="slupipe",
        description="Prompt-based multi-intent understanding pipeline.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    build = sub.add_parser(
        "build-dataset", help="expand a corpus into prompt/target training files"
    )
    _add_common(build)
    build.add_argument(
        "--layout",
        choices=("split", "weighted"),
        help="emit only this layout (default: both)",
    )
    build.add_argument(
        "--sig",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="embed intent descriptions in slot prompts (default: on)",
    )
    build.add_argument(
        "--seed",
        type=int,
        help="shuffle the per-task layout with this seed (default: corpus order)",
    )
    build.add_argument("--out", help="output directory for the JSONL files")
    build.set_defaults(func=cmd_build_dataset)

    infer = sub.add_parser(
        "infer", help="run the staged pipeline over a split and dump predictions"
    )
    _add_common(infer)
    infer.add_argument(
        "--backend", help="'oracle' or the base URL of a generation server"
    )
    infer.add_argument(
        "--sig",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="steer slot prompts with the predicted intents (default: on)",
    )
    infer.add_argument(
        "--run-sp",
        action="store_true",
        default=None,
        help="also run the slot-prediction stage",
    )
    infer.add_argument(
        "--parallelism", type=int, help="samples to process concurrently (default: 1)"
    )
    infer.add_argument("--out", help="prediction dump file to write")
    infer.add_argument(
        "--dry-run",
        action="store_true",
        default=None,
        help="print the prompts that would be issued and exit",
    )
    infer.set_defaults(func=cmd_infer)

    evaluate = sub.add_parser(
        "evaluate", help="score a prediction dump against its gold split"
    )
    _add_common(evaluate)
    evaluate.add_argument("--pred", help="prediction dump file to score")
    evaluate.add_argument("--out", help="directory for metrics and per-sample CSVs")
    evaluate.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        merged = _merge(args)
        _validate(merged)
        return args.func(merged)
    except SystemExit as exc:  # argparse --help
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        print(f"slupipe: error: {exc}", file=sys.stderr)
        print("run 'slupipe --help' for usage", file=sys.stderr)
        return 1
    except (CorpusError, LexiconError, EvaluationError) as exc:
        print(f"slupipe: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"slupipe: i/o error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"slupipe: backend error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
