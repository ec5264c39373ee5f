"""Transfer a trained sentence encoder to binary polarity classification.

Pretrains an LSTM reverse-dictionary model on the 36-headword fixture with
a vocabulary widened to cover the polarity sentences, then compares the
three transfer modes at the same step budget:

  end_to_end  everything trained from scratch on polarity data
  frozen      pretrained encoder fixed, only the affine head trains
  fine_tune   pretrained encoder and head train together
"""

from pathlib import Path

from revdict import data as dp
from revdict import harness as hz

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# --- polarity data ---------------------------------------------------------

with open(FIXTURES / "polarity_pos.txt") as fp, \
     open(FIXTURES / "polarity_neg.txt") as fn:
    train_set, test_set = dp.load_polarity(fp, fn, seed=0)
# keep the demo quick
train_set = train_set[:400]
print(f"{len(train_set)} training / {len(test_set)} test sentences")

# --- pretrain a dictionary model whose vocab covers the polarity tokens ----

with open(FIXTURES / "webster_36.txt") as f:
    records = dp.parse_webster(f)
vocab = dp.Vocab()
for r in records:
    vocab.add(r.headword)
    for t in r.gloss_tokens:
        vocab.add(t)
for ex in train_set + test_set:
    for t in ex.tokens:
        vocab.add(t)
for r in records:
    r.headword_id = vocab.id(r.headword)
    r.gloss_ids = vocab.ids(r.gloss_tokens)

pre_cfg = hz.TrainConfig(model="lstm", epochs=120, seed=0, shuffle_seed=1,
                         emb_dim=16, hidden_dim=32, lr=2e-3,
                         separate_output_embeddings=True)
base, _ = hz.train_reverse_dict(records, vocab, pre_cfg)
print(f"pretrained base: {base.step} steps on {len(records)} definitions\n")

# --- the three transfer modes at one step budget ---------------------------

print(f"{'mode':<12} {'train_acc':>9} {'test_acc':>8} {'gap':>7}")
for mode in ("end_to_end", "frozen", "fine_tune"):
    cfg = hz.TrainConfig(model="lstm", epochs=8, seed=0, shuffle_seed=2,
                         emb_dim=16, hidden_dim=32, lr=2e-3, batch_size=32)
    needs_base = base if mode in ("frozen", "fine_tune") else None
    _, metrics = hz.train_classifier(train_set, test_set, mode, needs_base, cfg)
    last = metrics.epochs[-1]
    gap = last.train_acc - last.test_acc
    print(f"{mode:<12} {last.train_acc:>9.3f} {last.test_acc:>8.3f} {gap:>+7.3f}")
