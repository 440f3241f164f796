"""Command-line entry point: ``depreorder <subcommand> ...``."""

import argparse
import json
import logging
import sys

from depreorder import bleu as bleu_mod
from depreorder.corpus_io import read_aligned_corpus, read_conll, read_lines, read_target
from depreorder.decoder import (
    LogLinearConfig,
    decode,
    load_phrase_table,
    load_sparse_weights,
    load_weights,
    train_lm,
)
from depreorder.decoder.search import trace_record
from depreorder.embeddings import (
    EmbeddingTable,
    SkipGramConfig,
    filter_context_vocab,
    gen_dep_context_corpus,
    is_context_token,
    random_table,
    train_skipgram,
)
from depreorder.extract import (
    HEAD_CHILD,
    SIBLING,
    extract_all,
    read_instances,
    write_instances,
)
from depreorder.network import ReorderNet, TrainConfig, predict_swap, train_ensemble

log = logging.getLogger("depreorder")


def _punct_tags(text):
    return frozenset(t for t in text.split(",") if t)


def cmd_extract(args):
    pairs = read_aligned_corpus(args.parses, args.alignments, args.target)
    hc, sib = extract_all(pairs, args.punct_tags)
    with open(args.hc_out, "w", encoding="utf-8") as f:
        write_instances(f, HEAD_CHILD, hc)
    with open(args.sib_out, "w", encoding="utf-8") as f:
        write_instances(f, SIBLING, sib)
    log.info("%d head-child and %d sibling instances from %d sentence pairs", len(hc), len(sib), len(pairs))


def cmd_dep_corpus(args):
    lines = gen_dep_context_corpus(read_conll(args.parses), include_root_arc=not args.no_root_arc)
    with open(args.out, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(" ".join(line) + "\n")


def cmd_embed(args):
    corpus = [line.split() for line in read_lines(args.corpus) if line.strip()]
    if args.scheme == "random":
        vocab = sorted({w for line in corpus for w in line if not is_context_token(w)})
        table = random_table(vocab, args.dim, args.seed)
    else:
        cfg = SkipGramConfig(dim=args.dim, window=args.window, negatives=args.negatives,
                             epochs=args.epochs, learning_rate=args.lr,
                             min_count=args.min_count, seed=args.seed, workers=args.workers)
        table = filter_context_vocab(train_skipgram(corpus, cfg))
    table.save(args.out)


def cmd_train(args):
    relation, instances = read_instances(args.instances)
    held_relation, heldout = read_instances(args.heldout)
    if held_relation != relation:
        raise ValueError(f"held-out file holds {held_relation} instances, training file {relation}")
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      batches_per_epoch=args.batches_per_epoch, learning_rate=args.lr,
                      dropout=args.dropout, seed=args.seed, vocab_limit=args.vocab_limit,
                      dim=args.dim, hidden1=args.hidden1, hidden2=args.hidden2)
    embeddings = EmbeddingTable.load(args.embeddings, dim=args.dim) if args.embeddings else None
    nets = train_ensemble(instances, heldout, cfg, args.ensemble, embeddings, workers=args.workers)
    for k, net in enumerate(nets):
        path = f"{args.out}.{k}.model"
        net.save(path)
        log.info("member %d: best epoch %d, held-out loss %.5f -> %s",
                 k, net.best_epoch, min([h for _, _, h in net.history], default=float("nan")), path)


def cmd_predict(args):
    net = ReorderNet.load(args.model)
    relation, instances = read_instances(args.instances)
    if relation != net.spec.relation:
        raise ValueError(f"model is for {net.spec.relation} pairs, instances are {relation}")
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if instances:
            for p in predict_swap(net, instances):
                out.write(f"{float(p)!r}\n")
    finally:
        if args.out:
            out.close()


def _distortion_limit(text):
    if text.lower() in ("none", "inf", "unlimited"):
        return None
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("distortion limit must be >= 0")
    return value


def cmd_decode(args):
    sentences = read_conll(args.input)
    table = load_phrase_table(args.phrase_table)
    lm = train_lm(read_target(args.lm_corpus), order=args.lm_order)
    ensembles = {
        HEAD_CHILD: [ReorderNet.load(p) for p in args.hc_models],
        SIBLING: [ReorderNet.load(p) for p in args.sib_models],
    }
    for rel, nets in ensembles.items():
        for net in nets:
            if net.spec.relation != rel:
                raise ValueError(f"a {net.spec.relation} model was given where {rel} models are expected")
    cfg = LogLinearConfig(
        weights=load_weights(args.weights) if args.weights else {},
        distortion_limit=args.distortion_limit,
        beam_size=args.beam,
        punct_tags=args.punct_tags,
        ds_weights=load_sparse_weights(args.ds_weights) if args.ds_weights else {},
        ensembles=ensembles,
    )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        for k, tree in enumerate(sentences):
            result = decode(tree, table, lm, cfg, kbest=args.kbest, name=f"#{k + 1}")
            out.write(" ".join(result.best.output) + "\n")
            if trace:
                trace.write(json.dumps(trace_record(tree, result, cfg, index=k), sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()
        if trace:
            trace.close()


def cmd_eval(args):
    hyps = read_target(args.hyp)
    refs = [read_target(path) for path in args.ref]
    for path, r in zip(args.ref, refs):
        if len(r) != len(hyps):
            raise ValueError(f"{path} has {len(r)} lines, hypothesis file has {len(hyps)}")
    sets = [list(segment) for segment in zip(*refs)]
    score = bleu_mod.bleu(hyps, sets, max_n=args.max_n, case_insensitive=not args.case_sensitive)
    print(f"BLEU = {100 * score:.2f}")


def build_parser():
    p = argparse.ArgumentParser(prog="depreorder", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract", help="extract head-child and sibling instances")
    s.add_argument("--parses", required=True, help="source parses (8-column CoNLL)")
    s.add_argument("--alignments", required=True, help="0-based i-j alignment lines")
    s.add_argument("--target", required=True, help="tokenized target sentences")
    s.add_argument("--hc-out", required=True, help="output head-child instance file")
    s.add_argument("--sib-out", required=True, help="output sibling instance file")
    s.add_argument("--punct-tags", type=_punct_tags, default=frozenset({"PU"}),
                   help="comma-separated punctuation POS tags (default: PU)")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("dep-corpus", help="write dependency-context lines for embedding training")
    s.add_argument("--parses", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-root-arc", action="store_true", help="omit the line for the root arc")
    s.set_defaults(func=cmd_dep_corpus)

    s = sub.add_parser("embed", help="train skip-gram or random word embeddings")
    s.add_argument("--corpus", required=True, help="one whitespace-tokenized line per training instance")
    s.add_argument("--out", required=True, help="embedding text file")
    s.add_argument("--scheme", choices=("skipgram", "random"), default="skipgram")
    s.add_argument("--dim", type=int, default=100)
    s.add_argument("--window", type=int, default=1, help="1 for dependency contexts, 5 for plain text")
    s.add_argument("--negatives", type=int, default=5)
    s.add_argument("--epochs", type=int, default=5)
    s.add_argument("--lr", type=float, default=0.025)
    s.add_argument("--min-count", type=int, default=1)
    s.add_argument("--workers", type=int, default=1, help=">1 trains shards concurrently (not reproducible)")
    s.add_argument("--seed", type=int, default=1)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("train", help="train a swap classifier (or an ensemble)")
    s.add_argument("--instances", required=True)
    s.add_argument("--heldout", required=True)
    s.add_argument("--out", required=True, help="output prefix; member k goes to PREFIX.k.model")
    s.add_argument("--embeddings", help="word embedding file used to initialise the word table")
    s.add_argument("--ensemble", type=int, default=1, help="number of members (seeds seed..seed+n-1)")
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--batch-size", type=int, default=128)
    s.add_argument("--batches-per-epoch", type=int, default=None,
                   help="fixed number of batches per epoch instead of a fixed batch size")
    s.add_argument("--lr", type=float, default=0.05)
    s.add_argument("--dropout", type=float, default=0.5)
    s.add_argument("--dim", type=int, default=100)
    s.add_argument("--hidden1", type=int, default=200)
    s.add_argument("--hidden2", type=int, default=100)
    s.add_argument("--vocab-limit", type=int, default=100000)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", type=int, default=1)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="swap probabilities for an instance file")
    s.add_argument("--model", required=True)
    s.add_argument("--instances", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("decode", help="translate parsed source sentences")
    s.add_argument("--input", required=True, help="source parses (8-column CoNLL)")
    s.add_argument("--phrase-table", required=True)
    s.add_argument("--lm-corpus", required=True, help="tokenized target text for the n-gram LM")
    s.add_argument("--lm-order", type=int, default=3)
    s.add_argument("--weights", help="'name = value' lines; nr_hc / nr_sib set all members")
    s.add_argument("--ds-weights", help="sparse dependency-swap weights, 'key<TAB>weight'")
    s.add_argument("--hc-models", nargs="*", default=[])
    s.add_argument("--sib-models", nargs="*", default=[])
    s.add_argument("--beam", type=int, default=100)
    s.add_argument("--distortion-limit", type=_distortion_limit, default=14,
                   help="maximum jump; 'none' for unlimited (default 14)")
    s.add_argument("--punct-tags", type=_punct_tags, default=frozenset({"PU"}))
    s.add_argument("--kbest", type=int, default=1, help="hypotheses per sentence written to --trace")
    s.add_argument("--trace", help="JSON lines with per-feature scores and derivations")
    s.add_argument("--out", help="translations (default: stdout)")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("eval", help="case-insensitive BLEU with shortest-reference brevity penalty")
    s.add_argument("--hyp", required=True)
    s.add_argument("--ref", required=True, nargs="+", help="one or more reference files")
    s.add_argument("--max-n", type=int, default=4)
    s.add_argument("--case-sensitive", action="store_true")
    s.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"depreorder {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
