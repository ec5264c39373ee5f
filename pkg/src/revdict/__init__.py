"""revdict: reverse-dictionary sentence encoders over a from-scratch
reverse-mode autodiff engine.

Three encoders (2-layer LSTM, shared-weight recursive tree net, POS-gated
recursive tree net) score dictionary definitions against a word-embedding
vocabulary, with transfer to binary sentence classification.
"""

from . import autodiff, data, encoders, harness, objective
from .autodiff import Tape, Tensor, apply_primitive, backward
from .data import Bucket, DefinitionRecord, PolarityExample, TreeNode, Vocab
from .harness import (Checkpoint, Metrics, Model, TrainConfig, evaluate_topk,
                      load_checkpoint, query, save_checkpoint, train_classifier,
                      train_reverse_dict)
from .objective import bce_loss, score_vocab, topk_predict

__version__ = "0.1.0"

__all__ = [
    "autodiff", "data", "encoders", "harness", "objective",
    "Tape", "Tensor", "apply_primitive", "backward",
    "Bucket", "DefinitionRecord", "PolarityExample", "TreeNode", "Vocab",
    "Checkpoint", "Metrics", "Model", "TrainConfig", "evaluate_topk",
    "load_checkpoint", "query", "save_checkpoint", "train_classifier",
    "train_reverse_dict", "bce_loss", "score_vocab", "topk_predict",
]
