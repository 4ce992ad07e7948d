"""Training loop with split/weighted loss routing and checkpointing.

Loss bookkeeping follows the generation-pipeline contract: every figure is a
per-sequence negative log-likelihood *sum*, never a mean.  ``split`` mode
shuffles all task examples together and optimizes plain NLL; ``weighted``
mode steps over sample groups (one ID/SF/SP triple each) and optimizes
``alpha * L_ID + beta * L_SP + gamma * L_SF`` per group, logging the
components so the identity can be audited to 1e-6.

Model selection, when a validation file is given, picks the epoch with the
highest validation overall accuracy: a sample counts as correct only when
both its decoded intent set and its decoded slot-value pair set match the
targets exactly after whitespace normalization.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from pathlib import Path
from typing import Callable, Sequence

import torch
from slupipe import parse_intents, parse_pairs

from .data import Record, group_records, load_records
from .modeling import ModelSpec, build_model, collate, greedy_decode, sequence_nll
from .vocab import EOS_ID, Vocabulary

_DEV_MAX_NEW_TOKENS = 64
_MODEL_FILE = "model.pt"
_VOCAB_FILE = "vocab.json"
_CONFIG_FILE = "adapter_config.json"


class TrainerError(ValueError):
    """Invalid trainer configuration or training-time failure."""


class TrainingDivergedError(TrainerError):
    """Optimization produced a non-finite loss."""


@dataclasses.dataclass(frozen=True)
class TrainerConfig:
    """Hyperparameters; defaults mirror the reference training setup."""

    epochs: int = 10
    batch_size: int = 16
    max_seq_len: int = 128
    learning_rate: float = 1e-4
    dropout: float = 0.1
    loss_mode: str = "split"
    weights: tuple[float, float, float] = (1.0, 2.0, 1.0)
    seed: int = 0
    max_steps: int | None = None

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise TrainerError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise TrainerError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_seq_len < 8:
            raise TrainerError(f"max_seq_len must be >= 8, got {self.max_seq_len}")
        if not self.learning_rate > 0:
            raise TrainerError(
                f"learning_rate must be > 0, got {self.learning_rate}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise TrainerError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.loss_mode not in ("split", "weighted"):
            raise TrainerError(
                f"loss_mode must be 'split' or 'weighted', got {self.loss_mode!r}"
            )
        if len(self.weights) != 3 or any(w < 0 for w in self.weights):
            raise TrainerError(
                f"weights must be three non-negative numbers, got {self.weights!r}"
            )
        if not any(self.weights):
            raise TrainerError("weights must not all be zero")
        if self.seed < 0:
            raise TrainerError(f"seed must be >= 0, got {self.seed}")
        if self.max_steps is not None and self.max_steps < 1:
            raise TrainerError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclasses.dataclass(frozen=True)
class GroupLoss:
    """Per-sample loss components logged in weighted mode (NLL sums)."""

    sample_id: str
    l_id: float
    l_sf: float
    l_sp: float
    l_w: float


@dataclasses.dataclass(frozen=True)
class EpochStats:
    """One epoch of bookkeeping: per-task NLL totals and step losses."""

    epoch: int
    task_nll: dict[str, float]
    mean_loss: float
    steps: int
    group_losses: tuple[GroupLoss, ...] = ()
    dev_overall_acc: float | None = None


@dataclasses.dataclass(frozen=True)
class TrainingResult:
    checkpoint_dir: Path
    history: tuple[EpochStats, ...]
    steps: int
    best_epoch: int | None


def _encode_capped(vocab: Vocabulary, text: str, max_seq_len: int) -> list[int]:
    """Encode with EOS, truncating to max_seq_len while keeping EOS last."""
    ids = vocab.encode(text)
    if len(ids) > max_seq_len:
        ids = ids[:max_seq_len]
        ids[-1] = EOS_ID
    return ids


def _normalized_intents(span: str) -> frozenset[str]:
    parsed, _ = parse_intents(span)
    return frozenset(" ".join(i.split()) for i in parsed.intents)


def _normalized_pairs(span: str) -> frozenset[tuple[str, str]]:
    parsed, _ = parse_pairs(span)
    return frozenset(
        (" ".join(p.slot.split()), " ".join(p.value.split()))
        for p in parsed.pairs
    )


def _dev_overall_acc(
    model: torch.nn.Module,
    vocab: Vocabulary,
    groups: Sequence[tuple[str, tuple[Record, Record, Record]]],
) -> float:
    """Exact-match accuracy over intent and pair sets decoded greedily."""
    model.eval()
    hits = 0
    for _, (rec_id, rec_sf, _rec_sp) in groups:
        pred_intents = _normalized_intents(
            greedy_decode(model, vocab, rec_id.prompt, _DEV_MAX_NEW_TOKENS)
        )
        if pred_intents != _normalized_intents(rec_id.target):
            continue
        pred_pairs = _normalized_pairs(
            greedy_decode(model, vocab, rec_sf.prompt, _DEV_MAX_NEW_TOKENS)
        )
        if pred_pairs == _normalized_pairs(rec_sf.target):
            hits += 1
    model.train()
    return 100.0 * hits / len(groups)


def _check_finite(nll: torch.Tensor, epoch: int, step: int) -> None:
    if not torch.isfinite(nll).all():
        raise TrainingDivergedError(
            f"non-finite loss at epoch {epoch}, step {step}"
        )


def _save_checkpoint(
    out_dir: Path,
    state: dict[str, torch.Tensor],
    vocab: Vocabulary,
    cfg: TrainerConfig,
    best_epoch: int | None,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(state, out_dir / _MODEL_FILE)
    vocab.save(out_dir / _VOCAB_FILE)
    spec = ModelSpec()
    meta = {
        "vocab_size": len(vocab),
        "d_model": spec.d_model,
        "d_ff": spec.d_ff,
        "num_layers": spec.num_layers,
        "num_heads": spec.num_heads,
        "dropout": cfg.dropout,
        "seed": cfg.seed,
        "max_seq_len": cfg.max_seq_len,
        "best_epoch": best_epoch,
    }
    (out_dir / _CONFIG_FILE).write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )


def load_checkpoint(
    checkpoint_dir: str | Path,
) -> tuple[torch.nn.Module, Vocabulary, dict]:
    """Load a saved checkpoint; the model comes back in eval mode."""
    checkpoint_dir = Path(checkpoint_dir)
    meta = json.loads(
        (checkpoint_dir / _CONFIG_FILE).read_text(encoding="utf-8")
    )
    vocab = Vocabulary.load(checkpoint_dir / _VOCAB_FILE)
    spec = ModelSpec(
        d_model=meta["d_model"],
        d_ff=meta["d_ff"],
        num_layers=meta["num_layers"],
        num_heads=meta["num_heads"],
    )
    model = build_model(
        meta["vocab_size"], dropout=meta["dropout"], seed=meta["seed"], spec=spec
    )
    state = torch.load(checkpoint_dir / _MODEL_FILE, weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return model, vocab, meta


def train(
    train_path: str | Path,
    out_dir: str | Path,
    cfg: TrainerConfig,
    dev_path: str | Path | None = None,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> TrainingResult:
    """Train on a task-example file and write a checkpoint to out_dir."""
    out_dir = Path(out_dir)
    records = load_records(train_path)
    dev_groups = group_records(load_records(dev_path)) if dev_path else None

    vocab = Vocabulary.build(
        [r.prompt for r in records] + [r.target for r in records]
    )
    model = build_model(len(vocab), dropout=cfg.dropout, seed=cfg.seed)
    encoded = {
        id(r): (
            _encode_capped(vocab, r.prompt, cfg.max_seq_len),
            _encode_capped(vocab, r.target, cfg.max_seq_len),
        )
        for r in records
    }
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    rng = random.Random(cfg.seed)
    model.train()

    history: list[EpochStats] = []
    best_epoch: int | None = None
    best_acc = -1.0
    best_state: dict[str, torch.Tensor] | None = None
    total_steps = 0
    budget_left = lambda: cfg.max_steps is None or total_steps < cfg.max_steps

    for epoch in range(1, cfg.epochs + 1):
        if not budget_left():
            break
        task_nll = {"ID": 0.0, "SF": 0.0, "SP": 0.0}
        step_losses: list[float] = []
        epoch_steps = 0
        group_losses: list[GroupLoss] = []

        if cfg.loss_mode == "split":
            order = list(range(len(records)))
            rng.shuffle(order)
            for start in range(0, len(order), cfg.batch_size):
                if not budget_left():
                    break
                batch = [records[i] for i in order[start : start + cfg.batch_size]]
                prompts = [encoded[id(r)][0] for r in batch]
                targets = [encoded[id(r)][1] for r in batch]
                nll = sequence_nll(model, *collate(prompts, targets))
                _check_finite(nll, epoch, total_steps + 1)
                loss = nll.mean()
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                for record, value in zip(batch, nll.tolist()):
                    task_nll[record.task] += value
                step_losses.append(loss.item())
                total_steps += 1
                epoch_steps += 1
        else:
            groups = group_records(records)
            rng.shuffle(groups)
            alpha, beta, gamma = cfg.weights
            for start in range(0, len(groups), cfg.batch_size):
                if not budget_left():
                    break
                chunk = groups[start : start + cfg.batch_size]
                members = [rec for _, triple in chunk for rec in triple]
                prompts = [encoded[id(r)][0] for r in members]
                targets = [encoded[id(r)][1] for r in members]
                nll = sequence_nll(model, *collate(prompts, targets))
                _check_finite(nll, epoch, total_steps + 1)
                # Members are ordered (ID, SF, SP) within every group.
                by_group = nll.view(len(chunk), 3)
                weighted = (
                    alpha * by_group[:, 0]
                    + beta * by_group[:, 2]
                    + gamma * by_group[:, 1]
                )
                loss = weighted.mean()
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                for (sample_id, _), comps in zip(chunk, by_group.tolist()):
                    l_id, l_sf, l_sp = comps
                    # Logged in double precision so the weighted identity
                    # holds exactly against the logged components.
                    l_w = alpha * l_id + beta * l_sp + gamma * l_sf
                    task_nll["ID"] += l_id
                    task_nll["SF"] += l_sf
                    task_nll["SP"] += l_sp
                    group_losses.append(
                        GroupLoss(sample_id, l_id, l_sf, l_sp, l_w)
                    )
                step_losses.append(loss.item())
                total_steps += 1
                epoch_steps += 1

        dev_acc = None
        if dev_groups is not None:
            dev_acc = _dev_overall_acc(model, vocab, dev_groups)
            if dev_acc > best_acc:
                best_acc = dev_acc
                best_epoch = epoch
                best_state = {
                    k: v.detach().clone() for k, v in model.state_dict().items()
                }

        stats = EpochStats(
            epoch=epoch,
            task_nll=task_nll,
            mean_loss=math.fsum(step_losses) / max(len(step_losses), 1),
            steps=epoch_steps,
            group_losses=tuple(group_losses),
            dev_overall_acc=dev_acc,
        )
        history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)

    state = best_state if best_state is not None else model.state_dict()
    _save_checkpoint(out_dir, state, vocab, cfg, best_epoch)
    return TrainingResult(
        checkpoint_dir=out_dir,
        history=tuple(history),
        steps=total_steps,
        best_epoch=best_epoch,
    )
