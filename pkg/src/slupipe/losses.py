"""Numeric loss contract shared by any trainer implementation.

Losses are per-sequence sums of negative token log-probabilities, never
means.  The weighted mode combines the three per-task losses of one
sample as ``alpha*L_intent + beta*L_slot_prediction + gamma*L_slot_filling``
(defaults 1.0, 2.0, 1.0); the split mode routes each example's plain NLL
by its task tag, which changes bookkeeping but not the numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dataset import TrainingExample


class LossError(ValueError):
    """Raised for invalid log-probabilities, losses, or weights."""


@dataclass(frozen=True)
class TargetSequence:
    """Per-token log-probabilities of one generated target."""

    token_logprobs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "token_logprobs", tuple(float(v) for v in self.token_logprobs)
        )
        if not self.token_logprobs:
            raise LossError("target sequence needs at least one token")
        for value in self.token_logprobs:
            if not math.isfinite(value):
                raise LossError(f"non-finite log-probability {value!r}")
            if value > 0.0:
                raise LossError(f"log-probability {value!r} is positive")


@dataclass(frozen=True)
class WeightedLossConfig:
    alpha: float = 1.0
    beta: float = 2.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            weight = getattr(self, name)
            if not math.isfinite(weight) or weight < 0.0:
                raise LossError(f"{name} must be finite and non-negative, got {weight!r}")
        if self.alpha == self.beta == self.gamma == 0.0:
            raise LossError("at least one weight must be positive")


def nll(seq: TargetSequence) -> float:
    """Negative log-likelihood of one sequence: unnormalized sum."""
    return -math.fsum(seq.token_logprobs)


def _check_loss(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise LossError(f"{name} must be a finite non-negative loss, got {value!r}")
    return value


def combine_weighted(
    l_id: float, l_sp: float, l_sf: float, cfg: WeightedLossConfig = WeightedLossConfig()
) -> float:
    """Weighted per-sample combination of the three sub-task losses."""
    l_id = _check_loss(l_id, "intent loss")
    l_sp = _check_loss(l_sp, "slot prediction loss")
    l_sf = _check_loss(l_sf, "slot filling loss")
    return cfg.alpha * l_id + cfg.beta * l_sp + cfg.gamma * l_sf


def select_split_loss(example: TrainingExample, seq: TargetSequence) -> float:
    """Per-example loss in the split layout: the task only routes bookkeeping."""
    assert example.task is not None
    return nll(seq)
