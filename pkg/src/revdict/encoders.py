"""The three sentence encoders.

1. A 2-layer LSTM fed the token sequence in reverse order, sentence
   vector taken from the last layer's hidden state at the final real
   timestep (optionally projected down to the embedding dimension).
2. A recursive net over the dependency parse with one shared 32x32
   composition matrix.
3. A gated variant with one composition matrix per POS tag and a scalar
   gate in (-1, 1) per node computed from the node and its children.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import ContractError, DimensionError, Tensor
from .data import PAD_ID, StructureError, TreeNode


class EmbeddingTable:
    """Trainable |V| x d embedding rows; the PAD row stays exactly zero."""

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator,
                 scale: float = 0.08):
        self.table = ad.uniform_init((vocab_size, dim), rng, scale)
        self.table.data[PAD_ID] = 0.0
        self.dim = dim

    @property
    def vocab_size(self) -> int:
        return self.table.shape[0]

    def lookup(self, ids) -> Tensor:
        return ad.embedding_lookup(self.table, np.asarray(ids), frozen_rows=(PAD_ID,))

    def rezero_pad(self) -> None:
        # optimizer moment states can still drift the pad row; pin it
        self.table.data[PAD_ID] = 0.0

    def tensors(self, prefix: str = "embeddings") -> Dict[str, Tensor]:
        return {f"{prefix}/table": self.table}


# --------------------------------------------------------------------------
# LSTM


GATE_NAMES = ("i", "f", "o", "g")


@dataclass
class LstmLayerParams:
    W1: Dict[str, Tensor]  # input-to-gate, keyed by gate name
    W2: Dict[str, Tensor]  # hidden-to-gate
    B: Dict[str, Tensor]

    @classmethod
    def init(cls, in_dim: int, hidden: int, rng: np.random.Generator) -> "LstmLayerParams":
        return cls(
            W1={g: ad.uniform_init((in_dim, hidden), rng) for g in GATE_NAMES},
            W2={g: ad.uniform_init((hidden, hidden), rng) for g in GATE_NAMES},
            B={g: ad.uniform_init((hidden,), rng) for g in GATE_NAMES},
        )


@dataclass
class LstmParams:
    layers: List[LstmLayerParams]
    proj: Optional[Tensor]  # hidden -> output dim; None = raw hidden output
    hidden: int

    @classmethod
    def init(cls, emb_dim: int, hidden: int, out_dim: Optional[int],
             rng: np.random.Generator, n_layers: int = 2) -> "LstmParams":
        layers = []
        in_dim = emb_dim
        for _ in range(n_layers):
            layers.append(LstmLayerParams.init(in_dim, hidden, rng))
            in_dim = hidden
        proj = ad.uniform_init((hidden, out_dim), rng) if out_dim is not None else None
        return cls(layers=layers, proj=proj, hidden=hidden)

    @property
    def out_dim(self) -> int:
        return self.proj.shape[1] if self.proj is not None else self.hidden

    def tensors(self, prefix: str = "lstm") -> Dict[str, Tensor]:
        out: Dict[str, Tensor] = {}
        for l, layer in enumerate(self.layers):
            for g in GATE_NAMES:
                out[f"{prefix}/l{l}/W_{g}1"] = layer.W1[g]
                out[f"{prefix}/l{l}/W_{g}2"] = layer.W2[g]
                out[f"{prefix}/l{l}/B_{g}"] = layer.B[g]
        if self.proj is not None:
            out[f"{prefix}/proj"] = self.proj
        return out


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor,
              layer: LstmLayerParams) -> Tuple[Tensor, Tensor]:
    """One LSTM step: four independent gates, standard cell update."""
    if x.shape[-1] != layer.W1["i"].shape[0]:
        raise DimensionError(f"lstm_cell: input dim {x.shape[-1]} does not match "
                             f"layer input dim {layer.W1['i'].shape[0]}")
    gates = {}
    for g in GATE_NAMES:
        pre = ad.add(ad.add(ad.matmul(x, layer.W1[g]), ad.matmul(h_prev, layer.W2[g])),
                     layer.B[g])
        gates[g] = ad.tanh(pre) if g == "g" else ad.sigmoid(pre)
    c = ad.add(ad.hadamard(gates["f"], c_prev), ad.hadamard(gates["i"], gates["g"]))
    h = ad.hadamard(gates["o"], ad.tanh(c))
    return h, c


def encode_lstm(token_ids: Sequence[int], true_len: int, embeddings: EmbeddingTable,
                params: LstmParams) -> Tensor:
    """Sentence vector for one padded sequence.

    Real tokens are fed in reverse order; pad positions beyond true_len are
    never processed. Output is the top layer's final hidden state, run
    through the projection when one is configured.
    """
    if true_len < 1:
        raise ContractError("encode_lstm: empty sequence")
    real = list(token_ids[:true_len])
    real.reverse()
    h = [Tensor(np.zeros(params.hidden)) for _ in params.layers]
    c = [Tensor(np.zeros(params.hidden)) for _ in params.layers]
    for tok in real:
        x = embeddings.lookup(tok)
        for l, layer in enumerate(params.layers):
            h[l], c[l] = lstm_cell(x, h[l], c[l], layer)
            x = h[l]
    out = h[-1]
    if params.proj is not None:
        out = ad.matmul(out, params.proj)
    return out


def encode_lstm_batch(token_ids: np.ndarray, lengths: Sequence[int],
                      embeddings: EmbeddingTable, params: LstmParams) -> Tensor:
    """Batched variant of :func:`encode_lstm` over a (B, T) id matrix.

    Each row is reversed and left-aligned internally; finished rows carry
    their state forward unchanged via masking, so the result matches the
    per-example path up to float reassociation.
    """
    ids = np.asarray(token_ids, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    B = ids.shape[0]
    if np.any(lengths < 1):
        raise ContractError("encode_lstm_batch: empty sequence in batch")
    T = int(lengths.max())
    rev = np.full((B, T), PAD_ID, dtype=np.int64)
    for b in range(B):
        n = lengths[b]
        rev[b, :n] = ids[b, :n][::-1]

    hidden = params.hidden
    h = [Tensor(np.zeros((B, hidden))) for _ in params.layers]
    c = [Tensor(np.zeros((B, hidden))) for _ in params.layers]
    for t in range(T):
        active = (t < lengths).astype(np.float64)
        if active.all():
            mask = None
        else:
            mask = Tensor(np.repeat(active[:, None], hidden, axis=1))
            keep = Tensor(np.repeat(1.0 - active[:, None], hidden, axis=1))
        x = embeddings.lookup(rev[:, t])
        for l, layer in enumerate(params.layers):
            h_new, c_new = lstm_cell(x, h[l], c[l], layer)
            if mask is None:
                h[l], c[l] = h_new, c_new
            else:
                h[l] = ad.add(ad.hadamard(h_new, mask), ad.hadamard(h[l], keep))
                c[l] = ad.add(ad.hadamard(c_new, mask), ad.hadamard(c[l], keep))
            x = h[l]
    out = h[-1]
    if params.proj is not None:
        out = ad.matmul(out, params.proj)
    return out


# --------------------------------------------------------------------------
# recursive tree encoders


@dataclass
class SharedTreeParams:
    W: Tensor  # d x d
    b: Tensor  # d

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator) -> "SharedTreeParams":
        return cls(W=ad.uniform_init((dim, dim), rng), b=ad.uniform_init((dim,), rng))

    def tensors(self, prefix: str = "tree_shared") -> Dict[str, Tensor]:
        return {f"{prefix}/W": self.W, f"{prefix}/b": self.b}


FALLBACK_POS = "_FALLBACK"


@dataclass
class GatedTreeParams:
    W_by_pos: Dict[str, Tensor]  # includes the FALLBACK_POS matrix
    b: Tensor
    U1: Tensor  # d x gate_hidden
    c1: Tensor  # gate_hidden
    u2: Tensor  # gate_hidden
    c2: Tensor  # scalar (shape (1,))
    unseen_pos_count: int = 0

    @classmethod
    def init(cls, dim: int, pos_tags: Sequence[str], gate_hidden: int,
             rng: np.random.Generator) -> "GatedTreeParams":
        tags = list(dict.fromkeys(pos_tags)) + [FALLBACK_POS]
        return cls(
            W_by_pos={t: ad.uniform_init((dim, dim), rng) for t in tags},
            b=ad.uniform_init((dim,), rng),
            U1=ad.uniform_init((dim, gate_hidden), rng),
            c1=ad.uniform_init((gate_hidden,), rng),
            u2=ad.uniform_init((gate_hidden,), rng),
            c2=ad.uniform_init((1,), rng),
        )

    def matrix_for(self, pos: str) -> Tensor:
        W = self.W_by_pos.get(pos)
        if W is None:
            self.unseen_pos_count += 1
            W = self.W_by_pos[FALLBACK_POS]
        return W

    def tensors(self, prefix: str = "tree_gated") -> Dict[str, Tensor]:
        out = {f"{prefix}/W_pos/{t}": W for t, W in self.W_by_pos.items()}
        out[f"{prefix}/b"] = self.b
        out[f"{prefix}/gate/U1"] = self.U1
        out[f"{prefix}/gate/c1"] = self.c1
        out[f"{prefix}/gate/u2"] = self.u2
        out[f"{prefix}/gate/c2"] = self.c2
        return out


def _zero_vec(dim: int) -> Tensor:
    return Tensor(np.zeros(dim))


def encode_tree_shared(tree: TreeNode, embeddings: EmbeddingTable,
                       params: SharedTreeParams) -> Tensor:
    """Post-order relu(E_i W + b + sum of child vectors); pad nodes are
    hard-masked to the exact zero vector."""
    if tree is None:
        raise StructureError("encode_tree_shared: missing root")
    dim = params.W.shape[0]
    if tree.is_pad:
        return _zero_vec(dim)
    acc = ad.add(ad.matmul(embeddings.lookup(tree.token_id), params.W), params.b)
    for child in tree.children:
        if child.is_pad:
            continue
        acc = ad.add(acc, encode_tree_shared(child, embeddings, params))
    return ad.relu(acc)


def _gate_classifier(emb: Tensor, params: GatedTreeParams) -> Tensor:
    hidden = ad.relu(ad.add(ad.matmul(emb, params.U1), params.c1))
    score = ad.add(ad.matmul(hidden, params.u2), params.c2)
    return score  # shape (1,)


def gate_weight(node: TreeNode, embeddings: EmbeddingTable,
                params: GatedTreeParams) -> Tensor:
    """Scalar gate in (-1, 1): tanh of the max classifier score over the
    node and its immediate (non-pad) children, on raw word embeddings."""
    if node.is_pad:
        raise ContractError("gate_weight: pad node")
    scores = [_gate_classifier(embeddings.lookup(node.token_id), params)]
    for child in node.children:
        if child.is_pad:
            continue
        scores.append(_gate_classifier(embeddings.lookup(child.token_id), params))
    return ad.tanh(ad.max_reduce(ad.concat(scores)))


def encode_tree_gated(tree: TreeNode, embeddings: EmbeddingTable,
                      params: GatedTreeParams) -> Tensor:
    """Gated recursion: per-POS composition matrix, child vectors scaled by
    their gates; the root's own gate scales the returned vector."""
    if tree is None:
        raise StructureError("encode_tree_gated: missing root")
    dim = params.b.shape[0]
    if tree.is_pad:
        return _zero_vec(dim)
    f_root = _encode_gated_node(tree, embeddings, params)
    return ad.hadamard(f_root, gate_weight(tree, embeddings, params))


def _encode_gated_node(node: TreeNode, embeddings: EmbeddingTable,
                       params: GatedTreeParams) -> Tensor:
    W = params.matrix_for(node.pos)
    acc = ad.add(ad.matmul(embeddings.lookup(node.token_id), W), params.b)
    for child in node.children:
        if child.is_pad:
            continue
        f_child = _encode_gated_node(child, embeddings, params)
        w_child = gate_weight(child, embeddings, params)
        acc = ad.add(acc, ad.hadamard(f_child, w_child))
    return ad.relu(acc)
