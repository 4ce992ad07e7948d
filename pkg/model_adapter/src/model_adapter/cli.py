"""Command line interface: train a checkpoint, serve it over HTTP.

Exit codes: 0 success, 1 usage error, 2 data or training error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .data import DataFormatError
from .server import serve
from .trainer import EpochStats, TrainerConfig, TrainerError, train


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _parse_weights(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--weights needs three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise UsageError(f"--weights needs numbers, got {text!r}") from exc


def _print_epoch(stats: EpochStats) -> None:
    tasks = " ".join(f"{t} {stats.task_nll[t]:.4f}" for t in ("ID", "SF", "SP"))
    line = f"epoch {stats.epoch}: loss {stats.mean_loss:.4f} | {tasks}"
    if stats.dev_overall_acc is not None:
        line += f" | dev overall acc {stats.dev_overall_acc:.2f}"
    print(line, flush=True)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainerConfig()
    overrides = {
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "max_seq_len": args.max_seq_len,
        "learning_rate": args.lr,
        "dropout": args.dropout,
        "loss_mode": args.loss,
        "seed": args.seed,
        "max_steps": args.max_steps,
    }
    if args.weights is not None:
        overrides["weights"] = _parse_weights(args.weights)
    cfg = dataclasses.replace(
        cfg, **{k: v for k, v in overrides.items() if v is not None}
    )
    result = train(args.train, args.out, cfg, dev_path=args.dev, on_epoch=_print_epoch)
    summary = f"checkpoint written to {result.checkpoint_dir} ({result.steps} steps"
    if result.best_epoch is not None:
        summary += f", best epoch {result.best_epoch}"
    print(summary + ")")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    serve(args.checkpoint, host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="model-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    sub.required = True

    p_train = sub.add_parser("train", help="train a model on task examples")
    p_train.add_argument("--train", required=True, help="training examples (JSONL)")
    p_train.add_argument("--out", required=True, help="checkpoint output directory")
    p_train.add_argument("--dev", help="validation examples for model selection")
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", type=int)
    p_train.add_argument("--max-seq-len", type=int)
    p_train.add_argument("--max-steps", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--dropout", type=float)
    p_train.add_argument("--loss", choices=["split", "weighted"])
    p_train.add_argument("--weights", help="alpha,beta,gamma for weighted loss")
    p_train.add_argument("--seed", type=int)
    p_train.set_defaults(func=cmd_train)

    p_serve = sub.add_parser("serve", help="serve a checkpoint over HTTP")
    p_serve.add_argument("--checkpoint", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        print(f"model-adapter: error: {exc}", file=sys.stderr)
        print("run 'model-adapter --help' for usage", file=sys.stderr)
        return 1
    except (DataFormatError, TrainerError, OSError) as exc:
        print(f"model-adapter: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
