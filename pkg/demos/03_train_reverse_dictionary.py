"""Train a tree-structured reverse-dictionary model and query it.

Uses the bundled 36-headword fixture: trains the shared-weight recursive
encoder until it can name every training headword from its own gloss, then
evaluates on 12 held-out paraphrase definitions and answers free-text
queries.
"""

from pathlib import Path

from revdict import data as dp
from revdict import harness as hz

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def load_corpus():
    with open(FIXTURES / "webster_36.txt") as f:
        records = dp.parse_webster(f)
    vocab = dp.Vocab()
    for r in records:
        vocab.add(r.headword)
        for t in r.gloss_tokens:
            vocab.add(t)
    for r in records:
        r.headword_id = vocab.id(r.headword)
        r.gloss_ids = vocab.ids(r.gloss_tokens)
    with open(FIXTURES / "defs_36.conllu") as f:
        trees, _ = dp.read_conllu(f, vocab)
    for r, t in zip(records, trees):
        r.tree = t
    tests = []
    with open(FIXTURES / "test_12.txt") as f:
        for line in f:
            word, text = line.rstrip("\n").split("\t")
            toks = dp.tokenize(text)
            tests.append(dp.DefinitionRecord(
                headword=word, gloss_tokens=toks,
                headword_id=vocab.id(word), gloss_ids=vocab.ids(toks)))
    with open(FIXTURES / "test_12.conllu") as f:
        ttrees, _ = dp.read_conllu(f, vocab)
    for r, t in zip(tests, ttrees):
        r.tree = t
    return records, vocab, tests


records, vocab, tests = load_corpus()
print(f"{len(records)} definitions, vocab {len(vocab)}, {len(tests)} test items")

config = hz.TrainConfig(model="tree_shared", epochs=150, seed=0, shuffle_seed=100,
                        emb_dim=32, hidden_dim=64, lr=2e-3,
                        separate_output_embeddings=True, stop_train_top1=1.0)
ckpt, metrics = hz.train_reverse_dict(records, vocab, config)
last = metrics.epochs[-1]
print(f"trained {len(metrics.epochs)} epochs: "
      f"loss {last.mean_loss:.4f}, train top-1 {last.top1:.2f}")

held_out = hz.evaluate_topk(ckpt, tests).epochs[0]
print(f"held-out paraphrases: top-1 {held_out.top1:.3f}, top-3 {held_out.top3:.3f}")

for text in ("a furry pet animal that hunts mice",
             "printed pages bound together for reading"):
    ranked, oov = hz.query(ckpt, text, k=3)
    pretty = ", ".join(f"{w} ({s:+.2f})" for w, s in ranked)
    print(f"query: {text!r}")
    if oov:
        print(f"  oov tokens: {oov}")
    print(f"  -> {pretty}")
