"""Vocabulary scoring and the training loss.

A sentence vector is dotted against every output-embedding row to get
per-word logits; training minimizes mean sigmoid binary cross-entropy
against the one-hot headword indicator.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple, Union

import numpy as np

from . import autodiff as ad
from .autodiff import ContractError, DimensionError, Tensor


def score_vocab(sentence: Tensor, output_embeddings: Tensor) -> Tensor:
    """logits[k] = dot(sentence, output_embeddings[k]).

    ``sentence`` may be a single (d,) vector or a (B, d) batch; the output
    embedding table is (|V|, d).
    """
    if output_embeddings.data.ndim != 2:
        raise DimensionError(f"score_vocab: output embeddings must be 2-D, "
                             f"got {output_embeddings.shape}")
    d = output_embeddings.shape[1]
    if sentence.shape[-1] != d:
        raise DimensionError(f"score_vocab: sentence dim {sentence.shape[-1]} != "
                             f"embedding dim {d}")
    if sentence.data.ndim == 1:
        return ad.matmul(output_embeddings, sentence)
    return ad.matmul(sentence, ad.transpose(output_embeddings))


def topk_predict(scores: Union[Tensor, np.ndarray], k: int) -> List[Tuple[int, float]]:
    """Top-k (vocab id, logit) pairs, descending logit, ties by ascending id."""
    logits = scores.data if isinstance(scores, Tensor) else np.asarray(scores, dtype=np.float64)
    if logits.ndim != 1:
        raise DimensionError(f"topk_predict: expected a score vector, got {logits.shape}")
    n = logits.shape[0]
    if not 1 <= k <= n:
        raise ContractError(f"topk_predict: k={k} out of range for {n} scores")
    order = np.argsort(-logits, kind="stable")[:k]
    return [(int(i), float(logits[i])) for i in order]


def bce_loss(scores: Tensor, labels: np.ndarray) -> Tensor:
    """Mean sigmoid binary cross-entropy over the vocabulary.

    Computed in the stable form max(z,0) - z*y + log(1+exp(-|z|)) and
    differentiable through the tape. Labels must be 0/1 indicators.
    """
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != scores.shape:
        raise DimensionError(f"bce_loss: scores {scores.shape} vs labels {labels.shape}")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise ContractError("bce_loss: labels must be 0 or 1")
    return ad.sigmoid_bce(scores, labels)


def one_hot(index: int, size: int) -> np.ndarray:
    v = np.zeros(size)
    v[index] = 1.0
    return v
