"""Reference trainer and generation server for the prompt-pipeline dataset.

Consumes the pipeline's line-delimited training records, fine-tunes a
small text-to-text model, and serves ``POST /v1/generate`` per the wire
protocol.
"""

from .data import DataFormatError, Record, group_records, load_records
from .modeling import ModelSpec, build_model, greedy_decode
from .server import ModelServer, serve
from .trainer import (
    EpochStats,
    GroupLoss,
    TrainerConfig,
    TrainerError,
    TrainingDivergedError,
    TrainingResult,
    load_checkpoint,
    train,
)
from .vocab import EOS_ID, PAD_ID, UNK_ID, Vocabulary

__version__ = "0.1.0"
