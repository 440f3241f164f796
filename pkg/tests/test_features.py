import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depreorder.corpus_io import DepSentence, Token
from depreorder.decoder.features import (
    dbr_penalty,
    ddp_penalty,
    ds_features,
    ds_value,
    linked_pairs,
    nr_feature,
    orientation,
    parse_weights,
    relation_of,
    weight_of,
    zones,
)
from depreorder.extract import HEAD_CHILD, SIBLING, extract_head_child, extract_sibling
from depreorder.network import EPS, HEAD_CHILD_SPEC, SIBLING_SPEC, ReorderNet, build_vocabs


def projective_tree(rng, n):
    heads = {}

    def build(lo, hi, head):
        if lo > hi:
            return
        r = int(rng.integers(lo, hi + 1))
        heads[r] = head
        for a, b in ((lo, r - 1), (r + 1, hi)):
            # split each side into consecutive chunks hanging off r
            start = a
            while start <= b:
                end = int(rng.integers(start, b + 1))
                build(start, end, r)
                start = end + 1

    build(1, n, 0)
    return DepSentence([Token(i, f"w{i}", "NN", heads[i], "root" if heads[i] == 0 else "dep")
                        for i in range(1, n + 1)])


@pytest.mark.parametrize("prev,new,expected", [((1, 2), (3, 3), 0), ((1, 2), (5, 6), 2), ((4, 5), (1, 1), 5), (None, (1, 2), 0), (None, (3, 3), 2)])
def test_dbr(prev, new, expected):
    assert dbr_penalty(prev, new) == expected


def test_ddp_sample(sample_sentence):
    s = sample_sentence
    assert ddp_penalty(s, {4}, (1, 1), 4) == 1
    assert ddp_penalty(s, {4}, (5, 5), 4) == 0
    assert ddp_penalty(s, set(), (6, 8), 0) == 0
    # chongyu's subtree 4..8 complete: the unfinished subtree is shuo's, which holds word 1
    assert ddp_penalty(s, {4, 5, 6, 7, 8}, (1, 1), 8) == 0


@settings(max_examples=80)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_monotone_projective_has_no_ddp(seed, n):
    rng = np.random.default_rng(seed)
    tree = projective_tree(rng, n)
    cuts = sorted(set(int(c) for c in rng.integers(1, n + 1, size=3)) | {n})
    covered, start, total, last = set(), 1, 0, 0
    for end in cuts:
        total += ddp_penalty(tree, covered, (start, end), last)
        covered |= set(range(start, end + 1))
        start, last = end + 1, end
    assert total == 0


def test_ds_sibling_keys(sample_sentence):
    keys = sorted(k for k, _ in ds_features(sample_sentence, 8, 1))
    assert keys == sorted([
        "sib|LL|nsubj|ccomp|swapped",
        "sib|TT|PN|VA|swapped",
        "sib|LT|nsubj|VA|swapped",
        "sib|TL|PN|ccomp|swapped",
    ])
    # the same pair translated in the other order only flips the orientation
    other = sorted(k for k, _ in ds_features(sample_sentence, 1, 8))
    assert other == [k.replace("swapped", "in_order") for k in keys]


def test_ds_head_child_keys(sample_sentence):
    keys = sorted(k for k, _ in ds_features(sample_sentence, 2, 8))
    assert keys == sorted([
        "hc|LL|root|ccomp|left|in_order",
        "hc|TT|VV|VA|left|in_order",
        "hc|LT|root|VA|left|in_order",
        "hc|TL|VV|ccomp|left|in_order",
    ])
    # child translated first: the head still comes first in the key
    assert ds_features(sample_sentence, 8, 2)[0][0] == "hc|LL|root|ccomp|left|swapped"
    assert ds_features(sample_sentence, 6, 5)[1][0] == "hc|TT|LC|NN|right|swapped"


def test_ds_weights(sample_sentence):
    assert ds_value(sample_sentence, 8, 1, {}) == 0
    assert ds_value(sample_sentence, 8, 1, {"sib|TT|PN|VA|swapped": 0.5, "sib|LL|nsubj|ccomp|swapped": 2}) == 2.5


def test_unlinked_pair_rejected(sample_sentence):
    with pytest.raises(ValueError):
        ds_features(sample_sentence, 1, 5)
    with pytest.raises(ValueError):
        relation_of(sample_sentence, 2, 2)


def test_orientation():
    assert orientation(8, 1) == "swapped"
    assert orientation(2, 8) == "in_order"


def _nets(sample_pair, relation):
    spec, rows = (HEAD_CHILD_SPEC, extract_head_child(sample_pair)) if relation == HEAD_CHILD \
        else (SIBLING_SPEC, extract_sibling(sample_pair))
    return ReorderNet(spec, build_vocabs(spec, rows), 4, (6, 3), dropout=0.0, seed=0)


def _constant(net, logit):
    net.W1[:] = 0
    net.W2[:] = 0
    net.w_out[:] = 0
    net.b_out = logit
    return net


def test_nr_untrained_is_log_half(sample_pair):
    net = _constant(_nets(sample_pair, SIBLING), 0.0)
    s = sample_pair.source
    for x, x2 in ((8, 1), (1, 8)):
        [(name, value)] = nr_feature({SIBLING: [net]}, s, x, x2)
        assert name == "nr_sib.0"
        assert value == pytest.approx(math.log(0.5))


def test_nr_limits(sample_pair):
    net = _constant(_nets(sample_pair, HEAD_CHILD), 100.0)
    s = sample_pair.source
    [(_, swapped)] = nr_feature({HEAD_CHILD: [net]}, s, 8, 2)
    [(_, in_order)] = nr_feature({HEAD_CHILD: [net]}, s, 2, 8)
    assert swapped == pytest.approx(0, abs=1e-11)
    assert in_order == pytest.approx(math.log(EPS))


def test_nr_identical_members(sample_pair):
    net = _nets(sample_pair, SIBLING)
    values = nr_feature({SIBLING: [net, net.copy()]}, sample_pair.source, 4, 6)
    assert [n for n, _ in values] == ["nr_sib.0", "nr_sib.1"]
    assert values[0][1] == values[1][1]
    assert nr_feature({}, sample_pair.source, 4, 6) == []


def test_zones(sample_sentence):
    assert zones(sample_sentence) == [(1, 2), (3, 3), (4, 8)]
    assert zones(sample_sentence, punct_tags=frozenset()) == [(1, 8)]
    all_punct = DepSentence([Token(1, ",", "PU", 0, "root"), Token(2, ".", "PU", 1, "punct")])
    assert zones(all_punct) == [(1, 1), (2, 2)]


def test_linked_pairs(sample_sentence):
    pairs = linked_pairs(sample_sentence)
    assert (1, 2) in pairs and (2, 8) in pairs and (1, 8) in pairs
    assert (4, 6) in pairs and (5, 6) in pairs
    assert not any(3 in p for p in pairs)
    assert (1, 5) not in pairs


def test_weights():
    w = parse_weights("lm = 0.5\n# comment\nnr_hc = 2\nnr_hc.3 = -1\n\n")
    assert weight_of(w, "lm") == 0.5
    assert weight_of(w, "nr_hc.0") == 2 and weight_of(w, "nr_hc.3") == -1
    assert weight_of(w, "dbr") == 0
    with pytest.raises(ValueError, match="line 1"):
        parse_weights("lm 0.5")
    with pytest.raises(ValueError, match="line 2"):
        parse_weights("lm = 1\ndbr = x")
