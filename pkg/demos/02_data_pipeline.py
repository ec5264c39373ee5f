"""From raw dictionary text to padded training-ready records.

Reads the bundled Webster-style fixture, builds a vocabulary, attaches
dependency parses from the CoNLL-U file, and shows bucketing by tree depth
and sequence padding.
"""

from pathlib import Path

from revdict import data as dp

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# --- parse the dictionary --------------------------------------------------

with open(FIXTURES / "webster_36.txt") as f:
    records = dp.parse_webster(f)
print(f"parsed {len(records)} definitions")
first = records[0]
print(f"  e.g. {first.headword!r}: {' '.join(first.gloss_tokens[:8])} ...")

vocab = dp.Vocab()
for rec in records:
    vocab.add(rec.headword)
    for tok in rec.gloss_tokens:
        vocab.add(tok)
for rec in records:
    rec.headword_id = vocab.id(rec.headword)
    rec.gloss_ids = vocab.ids(rec.gloss_tokens)
print(f"vocabulary: {len(vocab)} types (ids 0/1 reserved for PAD/UNK)")

# --- attach parses ---------------------------------------------------------

with open(FIXTURES / "defs_36.conllu") as f:
    trees, skipped = dp.read_conllu(f, vocab)
print(f"read {len(trees)} parse trees ({skipped} malformed blocks skipped)")
for rec, tree in zip(records, trees):
    rec.tree = tree

depths = [t.depth() for t in trees]
print(f"tree depths: min {min(depths)}, max {max(depths)}")

# --- bucket by depth, pad to full trees ------------------------------------

buckets, dropped = dp.bucketize_and_pad(trees)
print("buckets (depth limit, branching, count):")
for b in sorted(buckets, key=lambda b: b.max_depth):
    print(f"  depth<={b.max_depth:2d} branching={b.branching}  {len(b.trees)} trees")
print(f"dropped as too deep: {dropped}")

# --- pad token sequences ---------------------------------------------------

ids, n, truncated = dp.pad_sequence(records[0].gloss_ids, dp.MAX_SEQ_LEN)
print(f"padded sequence: true length {n}, total {len(ids)}, "
      f"truncated={truncated}")

# --- shuffle augmentation --------------------------------------------------

variants = dp.augment_shuffle(records[0].gloss_ids, 10, seed=0)
print(f"augmentation x10 -> {len(variants)} orderings "
      f"(first is the original: {list(variants[0]) == list(records[0].gloss_ids)})")
print("ok")
