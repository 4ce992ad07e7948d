"""Prompt construction for the three generation sub-tasks.

Each task has one fixed template; the slot-filling and slot-prediction
templates carry an intent phrase so intent predictions can steer the
later stages.  Rendering is byte-exact: downstream components and the
test oracle both recognize prompts by these prefixes.

    intent detection:  transfer sentence to intents : <text>
    slot filling:      transfer sentence to pairs with <I> : <text>
    slot prediction:   transfer sentence to slots with <I> : <text>

``<I>`` is the intent descriptions joined by ``, ``, or ``none`` when no
intent is available.  The ablated variants drop ``with <I>`` entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .bio import Utterance
from .spans import EMPTY_SPAN, ITEM_SEP, IntentSpan


class PromptError(ValueError):
    """Raised for prompts that violate the template grammar."""


class TaskKind(str, Enum):
    INTENT_DETECTION = "ID"
    SLOT_FILLING = "SF"
    SLOT_PREDICTION = "SP"


_TASK_NOUN = {
    TaskKind.INTENT_DETECTION: "intents",
    TaskKind.SLOT_FILLING: "pairs",
    TaskKind.SLOT_PREDICTION: "slots",
}

ID_PREFIX = "transfer sentence to intents : "


@dataclass(frozen=True)
class Prompt:
    text: str
    task: TaskKind


def _intent_phrase(intents: IntentSpan) -> str:
    if not intents.intents:
        return EMPTY_SPAN
    return ITEM_SEP.join(intents.intents)


def build_prompt(
    task: TaskKind, utt: Utterance, intents: IntentSpan | None = None
) -> Prompt:
    """Render the template for ``task`` around ``utt``.

    ``intents`` must be omitted for intent detection and given for the
    other two tasks (an empty span renders as ``none``).
    """
    if task is TaskKind.INTENT_DETECTION:
        if intents is not None:
            raise PromptError("the intent detection template has no intent blank")
        return Prompt(ID_PREFIX + utt.raw_text, task)
    if intents is None:
        raise PromptError(
            f"{task.value} prompt needs an intent span; "
            "build_ablated_prompt omits the blank on purpose"
        )
    noun = _TASK_NOUN[task]
    text = f"transfer sentence to {noun} with {_intent_phrase(intents)} : {utt.raw_text}"
    return Prompt(text, task)


def build_ablated_prompt(task: TaskKind, utt: Utterance) -> Prompt:
    """Render the slot templates without the intent blank."""
    if task is TaskKind.INTENT_DETECTION:
        raise PromptError("the intent detection template has no intent blank to drop")
    noun = _TASK_NOUN[task]
    return Prompt(f"transfer sentence to {noun} : {utt.raw_text}", task)


def classify_prompt(text: str) -> TaskKind:
    """Recover the task from a rendered prompt's prefix."""
    if text.startswith(ID_PREFIX):
        return TaskKind.INTENT_DETECTION
    for task in (TaskKind.SLOT_FILLING, TaskKind.SLOT_PREDICTION):
        noun = _TASK_NOUN[task]
        if text.startswith(f"transfer sentence to {noun} with ") or text.startswith(
            f"transfer sentence to {noun} : "
        ):
            return task
    raise PromptError(f"unrecognized prompt prefix: {text[:40]!r}")
