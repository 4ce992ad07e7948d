"""Small encoder-decoder backbone and tensor plumbing.

The backbone is treated as opaque configuration: a randomly initialized
text-to-text transformer sized for desk-scale runs. Loss bookkeeping
uses per-sequence NLL sums (never means), matching the loss contract of
the dataset pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from transformers import T5Config, T5ForConditionalGeneration

from .vocab import EOS_ID, PAD_ID, Vocabulary

IGNORE_ID = -100


@dataclass(frozen=True)
class ModelSpec:
    d_model: int = 128
    d_ff: int = 256
    num_layers: int = 2
    num_heads: int = 4

    def __post_init__(self) -> None:
        if min(self.d_model, self.d_ff, self.num_layers, self.num_heads) < 1:
            raise ValueError("model dimensions must be positive")
        if self.d_model % self.num_heads:
            raise ValueError("d_model must be divisible by num_heads")


def build_model(
    vocab_size: int, dropout: float, seed: int, spec: ModelSpec = ModelSpec()
) -> T5ForConditionalGeneration:
    """Fresh backbone; seeding here makes re-initialization reproducible."""
    torch.manual_seed(seed)
    config = T5Config(
        vocab_size=vocab_size,
        d_model=spec.d_model,
        d_kv=spec.d_model // spec.num_heads,
        d_ff=spec.d_ff,
        num_layers=spec.num_layers,
        num_decoder_layers=spec.num_layers,
        num_heads=spec.num_heads,
        dropout_rate=dropout,
        pad_token_id=PAD_ID,
        eos_token_id=EOS_ID,
        decoder_start_token_id=PAD_ID,
    )
    return T5ForConditionalGeneration(config)


def collate(
    prompt_ids: list[list[int]], target_ids: list[list[int]]
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pad a batch: (input_ids, attention_mask, labels with ignore padding)."""
    in_len = max(len(ids) for ids in prompt_ids)
    out_len = max(len(ids) for ids in target_ids)
    input_ids = torch.full((len(prompt_ids), in_len), PAD_ID, dtype=torch.long)
    attention_mask = torch.zeros((len(prompt_ids), in_len), dtype=torch.long)
    labels = torch.full((len(target_ids), out_len), IGNORE_ID, dtype=torch.long)
    for i, ids in enumerate(prompt_ids):
        input_ids[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        attention_mask[i, : len(ids)] = 1
    for i, ids in enumerate(target_ids):
        labels[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
    return input_ids, attention_mask, labels


def sequence_nll(
    model: T5ForConditionalGeneration,
    input_ids: torch.Tensor,
    attention_mask: torch.Tensor,
    labels: torch.Tensor,
) -> torch.Tensor:
    """Per-sequence negative log-likelihood sums, shape [batch]."""
    logits = model(
        input_ids=input_ids, attention_mask=attention_mask, labels=labels
    ).logits
    log_probs = logits.log_softmax(dim=-1)
    mask = labels != IGNORE_ID
    gathered = log_probs.gather(-1, labels.clamp_min(0).unsqueeze(-1)).squeeze(-1)
    return -(gathered * mask).sum(dim=-1)


def greedy_decode(
    model: T5ForConditionalGeneration,
    vocab: Vocabulary,
    prompt: str,
    max_new_tokens: int,
) -> str:
    """Deterministic decode of one prompt."""
    ids = torch.tensor([vocab.encode(prompt)], dtype=torch.long)
    with torch.no_grad():
        generated = model.generate(
            input_ids=ids,
            attention_mask=torch.ones_like(ids),
            max_new_tokens=max_new_tokens,
            do_sample=False,
            num_beams=1,
            pad_token_id=PAD_ID,
            eos_token_id=EOS_ID,
        )
    return vocab.decode(generated[0].tolist())
