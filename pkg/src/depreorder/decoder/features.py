"""Reordering feature functions used by the decoder.

Orientation convention: when source word ``x`` is translated and a linked
word ``x2`` is still untranslated, ``x`` will precede ``x2`` in the output.
The pair is therefore *swapped* when ``x2`` lies to the left of ``x`` in the
source, and *in order* otherwise.
"""

import math

from depreorder.corpus_io import children_of, subtree_span
from depreorder.extract import (
    DEFAULT_PUNCT_TAGS,
    HEAD_CHILD,
    SIBLING,
    head_child_instance,
    sibling_instance,
)
from depreorder.network import EPS, predict_swap

SWAPPED = "swapped"
IN_ORDER = "in_order"
NR_PREFIX = {HEAD_CHILD: "nr_hc", SIBLING: "nr_sib"}


def dbr_penalty(prev_span, new_span):
    """Distance-based reordering penalty |start(new) - end(prev) - 1|; prev_span None at sentence start."""
    prev_end = 0 if prev_span is None else prev_span[1]
    return abs(new_span[0] - prev_end - 1)


def ddp_penalty(tree, coverage_before, new_span, last_word):
    """1 if translating ``new_span`` leaves an unfinished subtree, else 0.

    The subtree in question is the smallest one that contains ``last_word``
    (the last source word translated so far) and is not yet fully covered.
    Leaving it means ``new_span`` shares no word with it.
    """
    if not coverage_before:
        return 0
    covered = set(coverage_before)
    node = last_word
    while node != 0:
        span = subtree_span(tree, node)
        if not span <= covered:
            new_words = set(range(new_span[0], new_span[1] + 1))
            return 0 if span & new_words else 1
        node = tree[node].head
    return 0


def orientation(x, x_prime):
    return SWAPPED if x_prime < x else IN_ORDER


def relation_of(tree, a, b):
    """``(relation, first, second)``: (HEAD_CHILD, head, child) or (SIBLING, left, right)."""
    if tree[b].head == a:
        return HEAD_CHILD, a, b
    if tree[a].head == b:
        return HEAD_CHILD, b, a
    if tree[a].head == tree[b].head != 0:
        return SIBLING, min(a, b), max(a, b)
    raise ValueError(f"tokens {a} and {b} are not linked by a head-child or sibling relation")


def ds_features(tree, x, x_prime):
    """Sparse dependency-swap feature keys (each with value 1) for a translated/untranslated pair."""
    rel, first, second = relation_of(tree, x, x_prime)
    o = orientation(x, x_prime)
    a, b = tree[first], tree[second]
    combos = (("LL", a.label, b.label), ("TT", a.pos, b.pos),
              ("LT", a.label, b.pos), ("TL", a.pos, b.label))
    if rel == HEAD_CHILD:
        p = "left" if first < second else "right"
        return [(f"hc|{name}|{u}|{v}|{p}|{o}", 1) for name, u, v in combos]
    return [(f"sib|{name}|{u}|{v}|{o}", 1) for name, u, v in combos]


def ds_value(tree, x, x_prime, sparse_weights):
    return sum(sparse_weights.get(key, 0.0) * v for key, v in ds_features(tree, x, x_prime))


def pair_query(tree, x, x_prime, punct_tags=DEFAULT_PUNCT_TAGS):
    """The classifier instance for a linked pair, laid out exactly like a training instance."""
    rel, first, second = relation_of(tree, x, x_prime)
    if rel == HEAD_CHILD:
        return rel, head_child_instance(tree, first, second, punct_tags)
    return rel, sibling_instance(tree, first, second, punct_tags)


def nr_member_names(ensembles):
    names = []
    for rel in (HEAD_CHILD, SIBLING):
        names.extend(f"{NR_PREFIX[rel]}.{k}" for k in range(len(ensembles.get(rel, ()))))
    return names


def orientation_logprob(p_swap, o):
    p = min(max(p_swap, EPS), 1.0 - EPS)
    return math.log(p) if o == SWAPPED else math.log(1.0 - p)


def nr_feature(ensembles, tree, x, x_prime, punct_tags=DEFAULT_PUNCT_TAGS):
    """``[(feature name, log-probability of the realised orientation)]``, one per ensemble member."""
    rel, query = pair_query(tree, x, x_prime, punct_tags)
    o = orientation(x, x_prime)
    return [
        (f"{NR_PREFIX[rel]}.{k}", orientation_logprob(predict_swap(net, query), o))
        for k, net in enumerate(ensembles.get(rel, ()))
    ]


def zones(tree, punct_tags=DEFAULT_PUNCT_TAGS):
    """Punctuation-delimited ranges ``(start, end)``; each punctuation token is its own zone."""
    out = []
    start = None
    for tok in tree.tokens:
        if tok.pos in punct_tags:
            if start is not None:
                out.append((start, tok.index - 1))
                start = None
            out.append((tok.index, tok.index))
        elif start is None:
            start = tok.index
    if start is not None:
        out.append((start, len(tree)))
    return out


def linked_pairs(tree, punct_tags=DEFAULT_PUNCT_TAGS):
    """All unordered head-child and sibling pairs of non-punctuation words, as sorted tuples."""
    pairs = set()
    for tok in tree.tokens:
        if tok.pos in punct_tags:
            continue
        if tok.head and tree[tok.head].pos not in punct_tags:
            pairs.add(tuple(sorted((tok.index, tok.head))))
    for head in range(1, len(tree) + 1):
        kids = [k for k in children_of(tree, head) if tree[k].pos not in punct_tags]
        for i, a in enumerate(kids):
            for b in kids[i + 1:]:
                pairs.add((a, b))
    return sorted(pairs)


def weight_of(weights, name):
    """Weight by exact feature name, else by its group (text before the first '.'), else 0."""
    if name in weights:
        return weights[name]
    return weights.get(name.split(".", 1)[0], 0.0)


def parse_weights(text):
    weights = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"weights line {lineno}: expected 'name = value'")
        try:
            weights[name.strip()] = float(value)
        except ValueError:
            raise ValueError(f"weights line {lineno}: bad value {value.strip()!r}") from None
    return weights


def load_weights(path):
    with open(path, encoding="utf-8") as f:
        return parse_weights(f.read())


def load_sparse_weights(path):
    weights = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            key, sep, value = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'feature-key<TAB>weight'")
            weights[key] = float(value)
    return weights
