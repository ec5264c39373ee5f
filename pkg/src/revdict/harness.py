"""Training loops, top-k evaluation, transfer classification, checkpoints."""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import struct
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import autodiff as ad
from . import data as dp
from . import encoders as enc
from . import objective as obj
from .autodiff import ContractError, Tensor
from .data import DefinitionRecord, PolarityExample, TreeNode, Vocab

MODEL_KINDS = ("lstm", "tree_shared", "tree_gated")


class CheckpointError(ValueError):
    pass


class IncompatibleCheckpointError(CheckpointError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


@dataclass
class TrainConfig:
    model: str = "tree_shared"
    separate_output_embeddings: bool = False
    augment_factor: int = 1
    emb_dim: int = 32
    hidden_dim: int = 256
    gate_hidden: int = 10
    lstm_projection: bool = True
    optimizer: str = "adam"
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 32  # LSTM minibatch; tree models always run per-example
    max_steps: int = 0  # 0 = unlimited
    seed: int = 0
    shuffle_seed: int = 1
    max_seq_len: int = dp.MAX_SEQ_LEN
    stop_train_top1: float = 0.0  # stop early once in-epoch top-1 reaches this
    query_flat_tree_fallback: bool = True

    def validate(self) -> None:
        if self.model not in MODEL_KINDS:
            raise ContractError(f"unknown model kind '{self.model}'")
        if self.augment_factor not in dp.VALID_AUGMENT_FACTORS:
            raise ContractError(f"augment_factor must be one of "
                                f"{dp.VALID_AUGMENT_FACTORS}")
        for name in ("emb_dim", "hidden_dim", "gate_hidden", "batch_size", "max_seq_len"):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be positive")
        if self.lr < 0:
            raise ContractError("lr must be >= 0")

    @property
    def sentence_dim(self) -> int:
        if self.model == "lstm" and not self.lstm_projection:
            return self.hidden_dim
        return self.emb_dim


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    top1: float
    top3: float
    seconds: float
    train_acc: Optional[float] = None
    test_acc: Optional[float] = None


@dataclass
class Metrics:
    epochs: List[EpochStats] = field(default_factory=list)
    counters: Dict[str, int] = field(default_factory=dict)

    def bump(self, name: str, by: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + by

    def to_lines(self) -> List[str]:
        lines = [json.dumps({k: v for k, v in dataclasses.asdict(e).items()
                             if v is not None}, sort_keys=True)
                 for e in self.epochs]
        if self.counters:
            lines.append(json.dumps({"counters": self.counters}, sort_keys=True))
        return lines


# --------------------------------------------------------------------------
# model


class Model:
    """A sentence encoder plus embedding tables, built from a TrainConfig."""

    def __init__(self, config: TrainConfig, vocab: Vocab,
                 pos_tags: Sequence[str] = ()):
        config.validate()
        if config.model == "lstm" and not config.lstm_projection \
                and not config.separate_output_embeddings:
            raise ContractError("unprojected LSTM output cannot tie to the "
                                "input embedding table; use separate output "
                                "embeddings or enable the projection")
        self.config = config
        self.vocab = vocab
        rng = np.random.default_rng(config.seed)
        self.embeddings = enc.EmbeddingTable(len(vocab), config.emb_dim, rng)
        self.lstm: Optional[enc.LstmParams] = None
        self.tree_shared: Optional[enc.SharedTreeParams] = None
        self.tree_gated: Optional[enc.GatedTreeParams] = None
        if config.model == "lstm":
            out_dim = config.emb_dim if config.lstm_projection else None
            self.lstm = enc.LstmParams.init(config.emb_dim, config.hidden_dim,
                                            out_dim, rng)
        elif config.model == "tree_shared":
            self.tree_shared = enc.SharedTreeParams.init(config.emb_dim, rng)
        else:
            self.tree_gated = enc.GatedTreeParams.init(config.emb_dim, list(pos_tags),
                                                       config.gate_hidden, rng)
        self.output_separate: Optional[Tensor] = None
        if config.separate_output_embeddings:
            self.output_separate = ad.uniform_init((len(vocab), config.sentence_dim), rng)

    @property
    def kind(self) -> str:
        return self.config.model

    @property
    def output_embeddings(self) -> Tensor:
        if self.output_separate is not None:
            return self.output_separate
        return self.embeddings.table

    def parameters(self) -> Dict[str, Tensor]:
        out = self.embeddings.tensors()
        if self.lstm is not None:
            out.update(self.lstm.tensors())
        if self.tree_shared is not None:
            out.update(self.tree_shared.tensors())
        if self.tree_gated is not None:
            out.update(self.tree_gated.tensors())
        if self.output_separate is not None:
            out["output/table"] = self.output_separate
        return out

    def encode(self, record: DefinitionRecord) -> Tensor:
        if self.kind == "lstm":
            ids, true_len, _ = dp.pad_sequence(record.gloss_ids, self.config.max_seq_len)
            return enc.encode_lstm(ids, true_len, self.embeddings, self.lstm)
        tree = record.tree
        if tree is None:
            raise ContractError("tree model requires a parse tree on every example")
        if self.kind == "tree_shared":
            return enc.encode_tree_shared(tree, self.embeddings, self.tree_shared)
        return enc.encode_tree_gated(tree, self.embeddings, self.tree_gated)

    def encode_token_ids(self, gloss_ids: Sequence[int],
                         tree: Optional[TreeNode] = None) -> Tensor:
        rec = DefinitionRecord(headword="", gloss_tokens=[], headword_id=-1,
                               gloss_ids=list(gloss_ids), tree=tree)
        if self.kind != "lstm" and tree is None:
            if not self.config.query_flat_tree_fallback:
                raise ContractError("tree model query requires a CoNLL-U parse")
            rec.tree = flat_tree(gloss_ids)
        return self.encode(rec)

    def encode_lstm_batch(self, batch: Sequence[DefinitionRecord]) -> Tensor:
        assert self.kind == "lstm"
        T = self.config.max_seq_len
        ids = np.full((len(batch), T), dp.PAD_ID, dtype=np.int64)
        lens = np.zeros(len(batch), dtype=np.int64)
        for b, rec in enumerate(batch):
            padded, n, _ = dp.pad_sequence(rec.gloss_ids, T)
            ids[b] = padded
            lens[b] = n
        # columns past the longest sequence are all padding; drop them
        width = max(int(lens.max()), 1)
        return enc.encode_lstm_batch(ids[:, :width], lens, self.embeddings, self.lstm)


def flat_tree(gloss_ids: Sequence[int]) -> TreeNode:
    """Degenerate parse for unparsed queries: first token roots the rest."""
    if not gloss_ids:
        raise ContractError("cannot build a tree from an empty sequence")
    root = TreeNode(token_id=int(gloss_ids[0]), pos="X")
    root.children = [TreeNode(token_id=int(t), pos="X") for t in gloss_ids[1:]]
    return root


def collect_pos_tags(dataset: Sequence[DefinitionRecord]) -> List[str]:
    tags: Dict[str, None] = {}

    def walk(node: TreeNode) -> None:
        if not node.is_pad:
            tags.setdefault(node.pos, None)
        for c in node.children:
            walk(c)

    for rec in dataset:
        if rec.tree is not None:
            walk(rec.tree)
    return list(tags)


def _masked_logits(logits: np.ndarray) -> np.ndarray:
    out = logits.copy()
    out[..., dp.PAD_ID] = -np.inf
    out[..., dp.UNK_ID] = -np.inf
    return out


def _topk_hits(logits: np.ndarray, label: int, k: int) -> bool:
    ranked = obj.topk_predict(_masked_logits(logits), k)
    return any(i == label for i, _ in ranked)


# --------------------------------------------------------------------------
# reverse-dictionary training


def augment_dataset(dataset: Sequence[DefinitionRecord], factor: int,
                    seed: int) -> List[DefinitionRecord]:
    """Shuffle-augment gloss id sequences; original order preserved first."""
    if factor == 1:
        return list(dataset)
    out: List[DefinitionRecord] = []
    for i, rec in enumerate(dataset):
        variants = dp.augment_shuffle(rec.gloss_ids, factor, seed + i)
        for ids in variants:
            out.append(DefinitionRecord(headword=rec.headword,
                                        gloss_tokens=rec.gloss_tokens,
                                        headword_id=rec.headword_id,
                                        gloss_ids=list(ids), tree=None))
    return out


def train_reverse_dict(dataset: Sequence[DefinitionRecord], vocab: Vocab,
                       config: TrainConfig) -> Tuple["Checkpoint", Metrics]:
    """Encode each definition, score it against the vocabulary, minimize
    sigmoid cross-entropy against the one-hot headword, step the optimizer."""
    config.validate()
    if not dataset:
        raise ContractError("empty dataset")
    is_tree = config.model != "lstm"
    if is_tree:
        if config.augment_factor != 1:
            raise ContractError("shuffle augmentation is only meaningful for the "
                                "LSTM; parses of shuffled sentences do not exist")
        for rec in dataset:
            if rec.tree is None:
                raise ContractError("tree model requires a parse tree on every example")
        examples = list(dataset)
    else:
        examples = augment_dataset(dataset, config.augment_factor, config.shuffle_seed)

    model = Model(config, vocab, pos_tags=collect_pos_tags(dataset))
    params = model.parameters()
    optimizer = ad.Optimizer(params, kind=config.optimizer, lr=config.lr)
    shuffle_rng = np.random.default_rng(config.shuffle_seed)
    metrics = Metrics()
    n_vocab = len(vocab)
    step = 0
    batch = config.batch_size if not is_tree else 1

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(len(examples))
        if is_tree:
            # group by depth bucket for locality; contents unchanged
            order = sorted(order, key=lambda i: examples[i].tree.depth())
        losses: List[float] = []
        hits1 = hits3 = seen = 0
        stop = False
        for start in range(0, len(order), batch):
            idx = order[start:start + batch]
            recs = [examples[i] for i in idx]
            ad.zero_grads(params)
            with ad.Tape() as tape:
                if is_tree:
                    sent = model.encode(recs[0])
                else:
                    sent = model.encode_lstm_batch(recs)
                logits = obj.score_vocab(sent, model.output_embeddings)
                labels = np.zeros(logits.shape)
                if is_tree:
                    labels[recs[0].headword_id] = 1.0
                else:
                    for b, rec in enumerate(recs):
                        labels[b, rec.headword_id] = 1.0
                loss = obj.bce_loss(logits, labels)
                grads = ad.backward(tape, loss, params)
            optimizer.step(grads)
            model.embeddings.rezero_pad()
            losses.append(loss.item())
            lg = logits.data if logits.data.ndim == 2 else logits.data[None, :]
            for b, rec in enumerate(recs):
                hits1 += _topk_hits(lg[b], rec.headword_id, 1)
                hits3 += _topk_hits(lg[b], rec.headword_id, min(3, n_vocab - 2))
                seen += 1
            step += 1
            if config.max_steps and step >= config.max_steps:
                stop = True
                break
        stats = EpochStats(epoch=epoch, mean_loss=float(np.mean(losses)),
                           top1=hits1 / seen, top3=hits3 / seen,
                           seconds=time.perf_counter() - t0)
        metrics.epochs.append(stats)
        if model.tree_gated is not None:
            metrics.counters["unseen_pos"] = model.tree_gated.unseen_pos_count
        if stop or (config.stop_train_top1 and stats.top1 >= config.stop_train_top1):
            break

    ckpt = Checkpoint.from_model(model, step)
    return ckpt, metrics


def evaluate_topk(source: Union["Checkpoint", Model],
                  test_set: Sequence[DefinitionRecord]) -> Metrics:
    """Top-1/top-3 accuracy of the headword's rank; PAD/UNK never ranked."""
    if not test_set:
        raise ContractError("empty test set")
    model = source.to_model() if isinstance(source, Checkpoint) else source
    hits1 = hits3 = 0
    for rec in test_set:
        logits = obj.score_vocab(model.encode_token_ids(rec.gloss_ids, rec.tree),
                                 model.output_embeddings).data
        hits1 += _topk_hits(logits, rec.headword_id, 1)
        hits3 += _topk_hits(logits, rec.headword_id, 3)
    m = Metrics()
    m.epochs.append(EpochStats(epoch=0, mean_loss=float("nan"),
                               top1=hits1 / len(test_set),
                               top3=hits3 / len(test_set), seconds=0.0))
    return m


def query(source: Union["Checkpoint", Model], definition: str, k: int = 3,
          conllu_text: Optional[str] = None) -> Tuple[List[Tuple[str, float]], List[str]]:
    """Rank vocabulary words against a free-text definition.

    Returns (ranked (word, score) pairs, list of OOV tokens)."""
    if k < 1:
        raise ContractError("k must be >= 1")
    model = source.to_model() if isinstance(source, Checkpoint) else source
    tokens = dp.tokenize(definition)
    if not tokens:
        raise ContractError("definition is empty after tokenization")
    oov = [t for t in tokens if t not in model.vocab]
    ids = model.vocab.ids(tokens)
    tree = None
    if conllu_text is not None:
        trees, _ = dp.read_conllu(io.StringIO(conllu_text), model.vocab)
        if not trees:
            raise ContractError("no parse tree found in the supplied CoNLL-U text")
        tree = trees[0]
    logits = obj.score_vocab(model.encode_token_ids(ids, tree),
                             model.output_embeddings).data
    ranked = obj.topk_predict(_masked_logits(logits), min(k + 2, len(logits)))
    out = [(model.vocab.word(i), s) for i, s in ranked
           if i not in (dp.PAD_ID, dp.UNK_ID)][:k]
    return out, oov


# --------------------------------------------------------------------------
# transfer classification

CLASSIFY_MODES = ("end_to_end", "frozen", "fine_tune")


def train_classifier(train_set: Sequence[PolarityExample],
                     test_set: Sequence[PolarityExample], mode: str,
                     base: Optional["Checkpoint"], config: TrainConfig,
                     ) -> Tuple["Checkpoint", Metrics]:
    """Binary sentence classifier: encoder -> one affine layer -> 2 logits.

    end_to_end trains everything from scratch; frozen trains only the
    affine head on a base checkpoint; fine_tune trains everything starting
    from the base checkpoint.
    """
    if mode not in CLASSIFY_MODES:
        raise ContractError(f"unknown classify mode '{mode}'")
    if mode in ("frozen", "fine_tune") and base is None:
        raise ContractError(f"mode '{mode}' requires a base checkpoint")
    if not train_set:
        raise ContractError("empty training set")
    config.validate()
    if config.model != "lstm":
        raise ContractError("the transfer classifier runs on the LSTM encoder "
                            "(polarity sentences carry no parses)")

    if base is not None:
        model = base.to_model()
        vocab = model.vocab
    else:
        vocab = Vocab()
        for ex in train_set:
            for t in ex.tokens:
                vocab.add(t)
        model = Model(config, vocab)

    head_rng = np.random.default_rng(config.seed + 1)
    d = model.config.sentence_dim
    head_W = ad.uniform_init((d, 2), head_rng)
    head_b = ad.uniform_init((2,), head_rng)
    head = {"classifier/W": head_W, "classifier/b": head_b}

    if mode == "frozen":
        trainable = dict(head)
    else:
        trainable = model.parameters()
        trainable.pop("output/table", None)  # scoring table is not part of this task
        trainable.update(head)
    all_params = dict(model.parameters())
    all_params.update(head)

    optimizer = ad.Optimizer(trainable, kind=config.optimizer, lr=config.lr)
    shuffle_rng = np.random.default_rng(config.shuffle_seed)
    metrics = Metrics()
    step = 0

    def records(examples: Sequence[PolarityExample]) -> List[DefinitionRecord]:
        return [DefinitionRecord(headword="", gloss_tokens=list(ex.tokens),
                                 headword_id=ex.label,
                                 gloss_ids=model.vocab.ids(ex.tokens))
                for ex in examples]

    train_recs = records(train_set)
    test_recs = records(test_set)

    def accuracy(recs: List[DefinitionRecord]) -> float:
        if not recs:
            return float("nan")
        hits = 0
        for start in range(0, len(recs), config.batch_size):
            chunk = recs[start:start + config.batch_size]
            sent = model.encode_lstm_batch(chunk)
            logits = ad.add(ad.matmul(sent, head_W), head_b).data
            hits += int(np.sum(np.argmax(logits, axis=1)
                               == [r.headword_id for r in chunk]))
        return hits / len(recs)

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(len(train_recs))
        losses: List[float] = []
        stop = False
        for start in range(0, len(order), config.batch_size):
            recs = [train_recs[i] for i in order[start:start + config.batch_size]]
            ad.zero_grads(all_params)
            with ad.Tape() as tape:
                sent = model.encode_lstm_batch(recs)
                logits = ad.add(ad.matmul(sent, head_W), head_b)
                labels = np.zeros(logits.shape)
                for b, rec in enumerate(recs):
                    labels[b, rec.headword_id] = 1.0
                loss = obj.bce_loss(logits, labels)
                grads = ad.backward(tape, loss, trainable)
            optimizer.step(grads)
            if mode != "frozen":
                model.embeddings.rezero_pad()
            losses.append(loss.item())
            step += 1
            if config.max_steps and step >= config.max_steps:
                stop = True
                break
        metrics.epochs.append(EpochStats(
            epoch=epoch, mean_loss=float(np.mean(losses)), top1=float("nan"),
            top3=float("nan"), seconds=time.perf_counter() - t0,
            train_acc=accuracy(train_recs), test_acc=accuracy(test_recs)))
        if stop:
            break

    ckpt = Checkpoint.from_model(model, step, extra_tensors=head)
    return ckpt, metrics


# --------------------------------------------------------------------------
# checkpointing

CHECKPOINT_MAGIC = b"RVDICTCK"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    version: int
    config: TrainConfig
    vocab_words: List[str]
    tensors: Dict[str, np.ndarray]
    step: int

    @classmethod
    def from_model(cls, model: Model, step: int,
                   extra_tensors: Optional[Dict[str, Tensor]] = None) -> "Checkpoint":
        tensors = {k: v.data.copy() for k, v in model.parameters().items()}
        if extra_tensors:
            tensors.update({k: v.data.copy() for k, v in extra_tensors.items()})
        return cls(version=CHECKPOINT_VERSION, config=dataclasses.replace(model.config),
                   vocab_words=model.vocab.words, tensors=tensors, step=step)

    def pos_tags(self) -> List[str]:
        prefix = "tree_gated/W_pos/"
        return [k[len(prefix):] for k in self.tensors if k.startswith(prefix)
                and not k.endswith(enc.FALLBACK_POS)]

    def to_model(self) -> Model:
        vocab = Vocab.from_word_list(self.vocab_words)
        model = Model(self.config, vocab, pos_tags=self.pos_tags())
        params = model.parameters()
        for name, p in params.items():
            if name not in self.tensors:
                raise CorruptCheckpointError(f"checkpoint missing tensor '{name}'")
            if self.tensors[name].shape != p.data.shape:
                raise CorruptCheckpointError(
                    f"tensor '{name}' shape {self.tensors[name].shape} != "
                    f"expected {p.data.shape}")
            p.data = self.tensors[name].copy()
        return model

    def config_digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self.config), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    names = sorted(ckpt.tensors)
    payload_parts = []
    index = []
    offset = 0
    for name in names:
        arr = np.ascontiguousarray(ckpt.tensors[name], dtype="<f8")
        raw = arr.tobytes()
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload_parts.append(raw)
        offset += len(raw)
    payload = b"".join(payload_parts)
    header = json.dumps({
        "version": ckpt.version,
        "config": dataclasses.asdict(ckpt.config),
        "config_digest": ckpt.config_digest(),
        "vocab": ckpt.vocab_words,
        "step": ckpt.step,
        "tensors": index,
    }, sort_keys=True).encode()
    digest = hashlib.sha256(header + payload).digest()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", ckpt.version))
        f.write(digest)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        f.write(payload)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(CHECKPOINT_MAGIC) + 4 + 32 + 8 \
            or not blob.startswith(CHECKPOINT_MAGIC):
        raise CorruptCheckpointError(f"{path}: not a checkpoint file")
    off = len(CHECKPOINT_MAGIC)
    (version,) = struct.unpack_from("<I", blob, off)
    off += 4
    if version != CHECKPOINT_VERSION:
        raise IncompatibleCheckpointError(
            f"{path}: checkpoint format version {version}, "
            f"this build reads version {CHECKPOINT_VERSION}")
    digest = blob[off:off + 32]
    off += 32
    (header_len,) = struct.unpack_from("<Q", blob, off)
    off += 8
    rest = blob[off:]
    if len(rest) < header_len:
        raise CorruptCheckpointError(f"{path}: truncated header")
    if hashlib.sha256(rest).digest() != digest:
        raise CorruptCheckpointError(f"{path}: digest mismatch (corrupt or truncated)")
    header = json.loads(rest[:header_len].decode())
    payload = rest[header_len:]
    tensors: Dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + count * 8
        if end > len(payload):
            raise CorruptCheckpointError(f"{path}: truncated payload")
        tensors[entry["name"]] = np.frombuffer(
            payload[start:end], dtype="<f8").reshape(shape).copy()
    config = TrainConfig(**header["config"])
    return Checkpoint(version=version, config=config, vocab_words=header["vocab"],
                      tensors=tensors, step=header["step"])
