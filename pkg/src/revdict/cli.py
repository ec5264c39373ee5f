"""Command-line surface: prepare / train / eval / query / classify / inspect.

Exit codes: 0 success, 1 domain error (bad data, bad checkpoint), 2 usage
error. `query` without a positional definition enters a read-a-line REPL.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import data as dp
from . import harness as hz
from .autodiff import ContractError, DimensionError, NumericError
from .data import FormatError, StructureError


def _read_config_file(path: str) -> Dict[str, str]:
    """Flat key=value file; blank lines and # comments ignored."""
    out: Dict[str, str] = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revdict",
                                     description="reverse-dictionary trainer and query tool")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--config", default=None,
                       help="flat key=value config file; explicit flags win")

    p = sub.add_parser("prepare", help="build a dataset from raw corpora")
    common(p)
    p.add_argument("--dict", required=True, help="Webster-format dictionary text")
    p.add_argument("--conllu", default=None,
                   help="CoNLL-U parses aligned one block per definition")
    p.add_argument("--out", required=True, help="output dataset path "
                                                "(vocab written to <out>.vocab)")
    p.add_argument("--augment", type=int, default=1, choices=(1, 10, 100, 1000),
                   help="shuffle-augmentation factor (default 1)")

    p = sub.add_parser("train", help="train a reverse-dictionary model")
    common(p)
    p.add_argument("--model", required=True, choices=hz.MODEL_KINDS)
    p.add_argument("--data", required=True, help="dataset from `prepare`")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--wout-separate", action="store_true",
                   help="use a separate output embedding table")
    p.add_argument("--augment", type=int, default=1, choices=(1, 10, 100, 1000))
    p.add_argument("--emb-dim", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=256)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-steps", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--metrics", default=None,
                   help="write per-epoch metrics as JSON lines here")

    p = sub.add_parser("eval", help="top-k accuracy on a test file")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True,
                   help="dataset-format file, or word<TAB>definition lines")
    p.add_argument("--conllu", default=None, help="parses for the test definitions")
    p.add_argument("--k", type=int, default=3)

    p = sub.add_parser("query", help="rank words for a definition (REPL without arg)")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("definition", nargs="?", default=None)
    p.add_argument("--k", type=int, default=3)

    p = sub.add_parser("classify", help="binary polarity transfer training")
    common(p)
    p.add_argument("--mode", required=True, choices=hz.CLASSIFY_MODES)
    p.add_argument("--base", default=None, help="base checkpoint for frozen/fine_tune")
    p.add_argument("--pos", required=True, help="positive sentences, one per line")
    p.add_argument("--neg", required=True, help="negative sentences, one per line")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--emb-dim", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=256)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-steps", type=int, default=0)
    p.add_argument("--out", default=None, help="checkpoint output path")

    p = sub.add_parser("inspect", help="print checkpoint header and tensor summary")
    common(p)
    p.add_argument("--checkpoint", required=True)

    return parser


def _apply_config_file(args: argparse.Namespace, argv: Sequence[str]) -> None:
    if not getattr(args, "config", None):
        return
    values = _read_config_file(args.config)
    explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in argv
                if a.startswith("--")}
    for key, value in values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in explicit:
            continue
        current = getattr(args, attr)
        if isinstance(current, bool):
            setattr(args, attr, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(args, attr, int(value))
        elif isinstance(current, float):
            setattr(args, attr, float(value))
        else:
            setattr(args, attr, value)


# --------------------------------------------------------------------------
# subcommand bodies


def _cmd_prepare(args) -> int:
    with open(args.dict) as f:
        records = dp.parse_webster(f)
    vocab = dp.Vocab()
    for rec in records:
        vocab.add(rec.headword)
        for t in rec.gloss_tokens:
            vocab.add(t)
    for rec in records:
        rec.headword_id = vocab.id(rec.headword)
        rec.gloss_ids = vocab.ids(rec.gloss_tokens)
    if args.conllu:
        with open(args.conllu) as f:
            trees, skipped = dp.read_conllu(f, vocab)
        if len(trees) != len(records):
            raise FormatError(f"{args.conllu}: {len(trees)} parses for "
                              f"{len(records)} definitions")
        for rec, tree in zip(records, trees):
            rec.tree = tree
        if skipped:
            print(f"skipped {skipped} malformed parse blocks", file=sys.stderr)
    if args.augment != 1:
        out_records = []
        for i, rec in enumerate(records):
            for ids in dp.augment_shuffle(rec.gloss_ids, args.augment, args.seed + i):
                out_records.append(dataclasses.replace(rec, gloss_ids=list(ids), tree=None))
        records = out_records
    with open(args.out, "w") as f:
        dp.write_dataset(records, f)
    with open(args.out + ".vocab", "w") as f:
        dp.write_vocab(vocab, f)
    print(f"wrote {len(records)} records, vocab size {len(vocab)}")
    return 0


def _train_config(args, model: Optional[str] = None) -> hz.TrainConfig:
    cfg = hz.TrainConfig(
        model=model or args.model,
        separate_output_embeddings=getattr(args, "wout_separate", False),
        augment_factor=getattr(args, "augment", 1),
        emb_dim=args.emb_dim,
        hidden_dim=args.hidden_dim,
        optimizer=getattr(args, "optimizer", "adam"),
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        max_steps=args.max_steps,
        seed=args.seed,
        shuffle_seed=args.seed + 1,
    )
    return cfg


def _cmd_train(args) -> int:
    with open(args.data) as f:
        dataset = dp.read_dataset(f)
    with open(args.data + ".vocab") as f:
        vocab = dp.read_vocab(f)
    cfg = _train_config(args)
    ckpt, metrics = hz.train_reverse_dict(dataset, vocab, cfg)
    hz.save_checkpoint(ckpt, args.out)
    _print_metrics(metrics)
    if args.metrics:
        with open(args.metrics, "w") as f:
            f.write("\n".join(metrics.to_lines()) + "\n")
    return 0


def _load_test_records(path: str, conllu_path: Optional[str],
                       vocab: dp.Vocab) -> List[dp.DefinitionRecord]:
    records: List[dp.DefinitionRecord] = []
    with open(path) as f:
        first = f.readline()
        f.seek(0)
        if first and not first.split("\t")[0].isdigit():
            # word<TAB>definition text
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if "\t" not in line:
                    raise FormatError(f"{path}:{lineno}: expected word<TAB>definition")
                word, text = line.split("\t", 1)
                toks = dp.tokenize(text)
                records.append(dp.DefinitionRecord(
                    headword=word.lower(), gloss_tokens=toks,
                    headword_id=vocab.id(word.lower()), gloss_ids=vocab.ids(toks)))
        else:
            records = dp.read_dataset(f)
    if conllu_path:
        with open(conllu_path) as f:
            trees, _ = dp.read_conllu(f, vocab)
        if len(trees) != len(records):
            raise FormatError(f"{conllu_path}: {len(trees)} parses for "
                              f"{len(records)} test records")
        for rec, tree in zip(records, trees):
            rec.tree = tree
    return records


def _cmd_eval(args) -> int:
    ckpt = hz.load_checkpoint(args.checkpoint)
    vocab = dp.Vocab.from_word_list(ckpt.vocab_words)
    records = _load_test_records(args.test, args.conllu, vocab)
    metrics = hz.evaluate_topk(ckpt, records)
    stats = metrics.epochs[0]
    print(f"top-1 {stats.top1:.3f}")
    print(f"top-3 {stats.top3:.3f}")
    return 0


def _cmd_query(args) -> int:
    ckpt = hz.load_checkpoint(args.checkpoint)

    def answer(text: str) -> None:
        ranked, oov = hz.query(ckpt, text, k=args.k)
        if oov:
            print("oov: " + " ".join(sorted(set(oov))))
        for word, score in ranked:
            print(f"{word}\t{score:.4f}")

    if args.definition is not None:
        answer(args.definition)
        return 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            answer(line)
        except ContractError as e:
            print(f"error: {e}", file=sys.stderr)
    return 0


def _cmd_classify(args) -> int:
    base = hz.load_checkpoint(args.base) if args.base else None
    with open(args.pos) as fp, open(args.neg) as fn:
        train_set, test_set = dp.load_polarity(fp, fn, seed=args.seed)
    cfg = _train_config(args, model="lstm")
    ckpt, metrics = hz.train_classifier(train_set, test_set, args.mode, base, cfg)
    _print_metrics(metrics)
    if args.out:
        hz.save_checkpoint(ckpt, args.out)
    return 0


def _cmd_inspect(args) -> int:
    ckpt = hz.load_checkpoint(args.checkpoint)
    print(f"format version  {ckpt.version}")
    print(f"model           {ckpt.config.model}")
    print(f"vocab size      {len(ckpt.vocab_words)}")
    print(f"training steps  {ckpt.step}")
    print(f"config digest   {ckpt.config_digest()}")
    total = 0
    for name in sorted(ckpt.tensors):
        arr = ckpt.tensors[name]
        total += arr.size
        print(f"  {name}  {arr.shape}")
    print(f"total parameters {total}")
    return 0


def _print_metrics(metrics: hz.Metrics) -> None:
    header = False
    for e in metrics.epochs:
        if e.train_acc is not None:
            if not header:
                print(f"{'epoch':>5} {'loss':>10} {'train_acc':>9} {'test_acc':>8}")
                header = True
            print(f"{e.epoch:>5} {e.mean_loss:>10.6f} {e.train_acc:>9.3f} "
                  f"{e.test_acc:>8.3f}")
        else:
            if not header:
                print(f"{'epoch':>5} {'loss':>10} {'top1':>6} {'top3':>6} {'sec':>7}")
                header = True
            print(f"{e.epoch:>5} {e.mean_loss:>10.6f} {e.top1:>6.3f} "
                  f"{e.top3:>6.3f} {e.seconds:>7.2f}")
    for name, value in sorted(metrics.counters.items()):
        print(f"counter {name} = {value}")


_COMMANDS = {
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "query": _cmd_query,
    "classify": _cmd_classify,
    "inspect": _cmd_inspect,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _apply_config_file(args, argv)
        return _COMMANDS[args.command](args)
    except (FormatError, StructureError, ContractError, DimensionError, NumericError,
            hz.CheckpointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
