"""Corpus ingestion and batching.

Turns raw inputs (Webster-format dictionary text, CoNLL-U parse files,
polarity sentence files) into tokenized, augmented, bucketed, padded
training examples. All transformations are pure and seeded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

PAD_NODE_ID = -1  # token id carried by padding nodes inside trees
PAD_POS = "_PAD"

BUCKET_DEPTHS = (2, 4, 6, 8, 10, 12, 14)
MAX_SEQ_LEN = 66


class FormatError(ValueError):
    """Input stream is not in the documented format."""


class StructureError(ValueError):
    """A parse tree block is structurally invalid."""


# --------------------------------------------------------------------------
# vocabulary


class Vocab:
    """Bidirectional word <-> id map with reserved PAD and UNK ids."""

    def __init__(self, words: Iterable[str] = ()):
        self._words: List[str] = [PAD_TOKEN, UNK_TOKEN]
        self._ids: Dict[str, int] = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        if word not in self._ids:
            self._ids[word] = len(self._words)
            self._words.append(word)
        return self._ids[word]

    def id(self, word: str) -> int:
        return self._ids.get(word, UNK_ID)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def word(self, idx: int) -> str:
        return self._words[idx]

    def __len__(self) -> int:
        return len(self._words)

    @property
    def words(self) -> List[str]:
        return list(self._words)

    def ids(self, tokens: Sequence[str]) -> List[int]:
        return [self.id(t) for t in tokens]

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Vocab":
        v = cls()
        for w in words:
            v.add(w)
        return v

    @classmethod
    def from_word_list(cls, words: List[str]) -> "Vocab":
        """Rebuild from a saved full word list (including the specials)."""
        if words[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise FormatError("vocab list must start with the PAD and UNK tokens")
        v = cls()
        for w in words[2:]:
            v.add(w)
        return v


# --------------------------------------------------------------------------
# records


@dataclass
class DefinitionRecord:
    headword: str
    gloss_tokens: List[str]
    headword_id: int = -1
    gloss_ids: List[int] = field(default_factory=list)
    tree: Optional["TreeNode"] = None


@dataclass
class PolarityExample:
    tokens: List[str]
    label: int  # 1 positive, 0 negative


@dataclass
class TreeNode:
    """One node of a dependency parse tree."""

    token_id: int  # -1 marks a padding node
    pos: str
    children: List["TreeNode"] = field(default_factory=list)

    @property
    def is_pad(self) -> bool:
        return self.token_id == PAD_NODE_ID

    def depth(self) -> int:
        # root alone has depth 1
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def max_branching(self) -> int:
        if not self.children:
            return 0
        return max(len(self.children), max(c.max_branching() for c in self.children))


@dataclass
class Bucket:
    max_depth: int
    branching: int
    trees: List[TreeNode] = field(default_factory=list)
    members: List[int] = field(default_factory=list)  # original indices


# --------------------------------------------------------------------------
# tokenization / Webster parsing

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:['\-][a-z0-9]+)*")
_HEADWORD_RE = re.compile(r"^[A-Z][A-Z'\-]*(; [A-Z][A-Z'\-]*)*$")
_SENSE_RE = re.compile(r"^\d+\.\s*(.*)$")


def tokenize(text: str) -> List[str]:
    """Lowercase, strip punctuation (keeping intra-word ' and -), split."""
    return _TOKEN_RE.findall(text.lower())


def parse_webster(stream: TextIO) -> List[DefinitionRecord]:
    """Extract (headword, gloss) records from Gutenberg Webster's text.

    A headword is a line of uppercase letters (plus apostrophes/hyphens,
    with semicolon-separated variants). Each "Defn:" paragraph and each
    numbered sense under the current headword yields one record per
    headword variant.
    """
    try:
        lines = stream.read().splitlines()
    except OSError as e:
        raise IOError(f"cannot read dictionary stream: {e}") from e

    records: List[DefinitionRecord] = []
    heads: List[str] = []
    i = 0

    def collect_paragraph(start: int, first: str) -> Tuple[str, int]:
        parts = [first]
        j = start
        while j < len(lines) and lines[j].strip() and not _HEADWORD_RE.match(lines[j].strip()):
            nxt = lines[j].strip()
            if nxt.startswith("Defn:") or _SENSE_RE.match(nxt):
                break
            parts.append(nxt)
            j += 1
        return " ".join(parts), j

    def emit(gloss_text: str) -> None:
        toks = tokenize(gloss_text)
        if not toks:
            return
        for h in heads:
            records.append(DefinitionRecord(headword=h.lower(), gloss_tokens=list(toks)))

    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if _HEADWORD_RE.match(line):
            heads = [h.strip() for h in line.split(";") if h.strip()]
            continue
        if not heads:
            continue
        if line.startswith("Defn:"):
            gloss, i = collect_paragraph(i, line[len("Defn:"):].strip())
            emit(gloss)
            continue
        m = _SENSE_RE.match(line)
        if m:
            gloss, i = collect_paragraph(i, m.group(1).strip())
            emit(gloss)

    if not records:
        raise FormatError("no definition records found in dictionary stream")
    return records


# --------------------------------------------------------------------------
# shuffle augmentation

VALID_AUGMENT_FACTORS = (1, 10, 100, 1000)


def augment_shuffle(tokens: Sequence[str], factor: int, seed: int) -> List[List[str]]:
    """Original sentence plus factor-1 seeded random permutations."""
    if factor not in VALID_AUGMENT_FACTORS:
        raise FormatError(f"augmentation factor must be one of {VALID_AUGMENT_FACTORS}, "
                          f"got {factor}")
    if not tokens:
        raise FormatError("cannot augment an empty token sequence")
    rng = np.random.default_rng(seed)
    out = [list(tokens)]
    for _ in range(factor - 1):
        perm = rng.permutation(len(tokens))
        out.append([tokens[j] for j in perm])
    return out


# --------------------------------------------------------------------------
# CoNLL-U ingestion


def read_conllu(stream: TextIO, vocab: Optional[Vocab] = None) -> Tuple[List[TreeNode], int]:
    """Read dependency trees from CoNLL-U text.

    Uses columns ID, FORM, UPOS, HEAD; HEAD 0 marks the root. Structurally
    invalid sentences (multiple roots, cycles, out-of-range heads) are
    skipped and counted. FORM tokens map through ``vocab`` when given,
    UNK for misses. Returns (trees, skipped_count).
    """
    trees: List[TreeNode] = []
    skipped = 0
    block: List[Tuple[int, List[str]]] = []

    def flush() -> None:
        nonlocal skipped
        if not block:
            return
        try:
            trees.append(_build_tree(block, vocab))
        except StructureError:
            skipped += 1
        block.clear()

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise FormatError(f"line {lineno}: expected 10 tab-separated columns, "
                              f"got {len(cols)}")
        if "-" in cols[0] or "." in cols[0]:
            continue  # multiword/empty tokens carry no tree structure
        block.append((lineno, cols))
    flush()
    return trees, skipped


def _build_tree(block: List[Tuple[int, List[str]]], vocab: Optional[Vocab]) -> TreeNode:
    n = len(block)
    nodes: List[TreeNode] = []
    heads: List[int] = []
    for lineno, cols in block:
        form, upos, head_s = cols[1], cols[3], cols[6]
        try:
            head = int(head_s)
        except ValueError as e:
            raise StructureError(f"line {lineno}: non-integer HEAD {head_s!r}") from e
        if head < 0 or head > n:
            raise StructureError(f"line {lineno}: HEAD {head} out of range for "
                                 f"{n}-token sentence")
        tok_id = vocab.id(form.lower()) if vocab is not None else len(nodes)
        nodes.append(TreeNode(token_id=tok_id, pos=upos))
        heads.append(head)

    roots = [i for i, h in enumerate(heads) if h == 0]
    if len(roots) != 1:
        lineno = block[0][0]
        raise StructureError(f"line {lineno}: sentence has {len(roots)} roots, expected 1")
    for i, h in enumerate(heads):
        if h > 0:
            nodes[h - 1].children.append(nodes[i])
    root = nodes[roots[0]]
    if root.node_count() != n:
        lineno = block[0][0]
        raise StructureError(f"line {lineno}: HEAD cycle detected")
    return root


# --------------------------------------------------------------------------
# tree bucketing and padding


def _pad_subtree(depth_left: int, branching: int) -> TreeNode:
    node = TreeNode(token_id=PAD_NODE_ID, pos=PAD_POS)
    if depth_left > 1:
        node.children = [_pad_subtree(depth_left - 1, branching) for _ in range(branching)]
    return node


def pad_tree(tree: TreeNode, depth: int, branching: int) -> TreeNode:
    """Pad to a full tree of the given depth and branching factor."""
    node = TreeNode(token_id=tree.token_id, pos=tree.pos)
    if depth > 1:
        kids = [pad_tree(c, depth - 1, branching) for c in tree.children]
        while len(kids) < branching:
            kids.append(_pad_subtree(depth - 1, branching))
        node.children = kids
    return node


def unpad_tree(tree: TreeNode) -> TreeNode:
    """Drop padding nodes, recovering the original tree."""
    node = TreeNode(token_id=tree.token_id, pos=tree.pos)
    node.children = [unpad_tree(c) for c in tree.children if not c.is_pad]
    return node


def bucketize_and_pad(trees: Sequence[TreeNode]) -> Tuple[List[Bucket], int]:
    """Group trees by depth bucket (2,4,...,14) and pad each to a full tree.

    Branching per bucket is the max observed child count in that bucket.
    Trees deeper than the deepest bucket are dropped and counted.
    Returns (buckets, dropped_count).
    """
    assignments: Dict[int, List[int]] = {}
    dropped = 0
    for i, t in enumerate(trees):
        d = t.depth()
        target = next((b for b in BUCKET_DEPTHS if d <= b), None)
        if target is None:
            dropped += 1
            continue
        assignments.setdefault(target, []).append(i)

    buckets: List[Bucket] = []
    for depth in BUCKET_DEPTHS:
        if depth not in assignments:
            continue
        members = assignments[depth]
        branching = max(max(trees[i].max_branching(), 1) for i in members)
        bucket = Bucket(max_depth=depth, branching=branching)
        for i in members:
            bucket.trees.append(pad_tree(trees[i], depth, branching))
            bucket.members.append(i)
        buckets.append(bucket)
    return buckets, dropped


# --------------------------------------------------------------------------
# sequence padding


def pad_sequence(ids: Sequence[int], max_len: int = MAX_SEQ_LEN) -> Tuple[List[int], int, bool]:
    """Fixed-length id sequence plus true length.

    Longer sequences keep the head and are truncated; the returned flag
    reports whether truncation happened.
    """
    truncated = len(ids) > max_len
    kept = list(ids[:max_len])
    true_len = len(kept)
    kept.extend([PAD_ID] * (max_len - true_len))
    return kept, true_len, truncated


# --------------------------------------------------------------------------
# polarity corpus


def load_polarity(pos_stream: TextIO, neg_stream: TextIO, seed: int = 7,
                  train_fraction: float = 0.9) -> Tuple[List[PolarityExample], List[PolarityExample]]:
    """Read one-sentence-per-line polarity files and split train/test."""
    examples: List[PolarityExample] = []
    for stream, label in ((pos_stream, 1), (neg_stream, 0)):
        count = 0
        for line in stream:
            toks = tokenize(line)
            if toks:
                examples.append(PolarityExample(tokens=toks, label=label))
                count += 1
        if count == 0:
            raise FormatError(f"empty polarity file for label {label}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(examples))
    cut = int(round(train_fraction * len(examples)))
    train = [examples[i] for i in order[:cut]]
    test = [examples[i] for i in order[cut:]]
    return train, test


# --------------------------------------------------------------------------
# dataset file serialization
#
# One record per line: headword_id TAB space-separated gloss ids
# [TAB nested-parenthesis tree]. Tree node: (token_id/POS child child ...).


def serialize_tree(tree: TreeNode) -> str:
    kids = "".join(" " + serialize_tree(c) for c in tree.children)
    return f"({tree.token_id}/{tree.pos}{kids})"


def parse_tree_text(text: str) -> TreeNode:
    pos_ = 0

    def parse() -> TreeNode:
        nonlocal pos_
        if text[pos_] != "(":
            raise FormatError(f"bad tree text at offset {pos_}")
        pos_ += 1
        j = pos_
        while text[j] not in " ()":
            j += 1
        tok = text[pos_:j]
        tid_s, pos_tag = tok.split("/", 1)
        node = TreeNode(token_id=int(tid_s), pos=pos_tag)
        pos_ = j
        while text[pos_] == " ":
            pos_ += 1
            node.children.append(parse())
        if text[pos_] != ")":
            raise FormatError(f"bad tree text at offset {pos_}")
        pos_ += 1
        return node

    node = parse()
    if pos_ != len(text):
        raise FormatError("trailing characters after tree text")
    return node


def write_dataset(records: Sequence[DefinitionRecord], stream: TextIO) -> None:
    for r in records:
        fields = [str(r.headword_id), " ".join(str(i) for i in r.gloss_ids)]
        if r.tree is not None:
            fields.append(serialize_tree(r.tree))
        stream.write("\t".join(fields) + "\n")


def read_dataset(stream: TextIO) -> List[DefinitionRecord]:
    records: List[DefinitionRecord] = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise FormatError(f"line {lineno}: expected 2 or 3 tab-separated fields")
        rec = DefinitionRecord(
            headword="", gloss_tokens=[],
            headword_id=int(fields[0]),
            gloss_ids=[int(x) for x in fields[1].split()],
        )
        if len(fields) == 3:
            rec.tree = parse_tree_text(fields[2])
        records.append(rec)
    if not records:
        raise FormatError("empty dataset file")
    return records


def write_vocab(vocab: Vocab, stream: TextIO) -> None:
    for w in vocab.words:
        stream.write(w + "\n")


def read_vocab(stream: TextIO) -> Vocab:
    words = [line.rstrip("\n") for line in stream if line.rstrip("\n")]
    return Vocab.from_word_list(words)
