import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depreorder.corpus_io import AlignedPair, DepSentence, Token, children_of
from depreorder.extract import (
    NULL_TRIPLE,
    HeadChildInstance,
    InstanceFormatError,
    SiblingInstance,
    extract_head_child,
    extract_sibling,
    punct_between,
    read_instances,
    signed_distance,
    target_order_label,
    write_instances,
)
from conftest import random_tree

SAMPLE_HC = [
    HeadChildInstance(("shuo", "VV", "root"), ("ta", "PN", "nsubj"), NULL_TRIPLE, -1, False, 0),
    HeadChildInstance(("shuo", "VV", "root"), NULL_TRIPLE, ("chongyu", "VA", "ccomp"), 2, True, 0),
    HeadChildInstance(("shang", "LC", "loc"), ("shichang", "NN", "lobj"), NULL_TRIPLE, -1, False, 1),
]
SAMPLE_SIB = [
    SiblingInstance(("ta", "PN", "nsubj", -1), ("chongyu", "VA", "ccomp", 2), ("shuo", "VV"), True, 0),
    SiblingInstance(("muqian", "NT", "tmod", -2), ("shang", "LC", "loc", -2), ("chongyu", "VA"), False, 0),
    SiblingInstance(("shang", "LC", "loc", -2), ("gongyou", "NN", "nsubj", -1), ("chongyu", "VA"), False, 1),
]


@pytest.mark.parametrize("head,child,expected", [(2, 1, -1), (2, 8, 2), (8, 7, -1), (8, 4, -2), (8, 6, -2)])
def test_signed_distance(sample_sentence, head, child, expected):
    assert signed_distance(sample_sentence, head, child) == expected


def test_signed_distance_requires_dependent(sample_sentence):
    with pytest.raises(ValueError):
        signed_distance(sample_sentence, 2, 5)


def test_punct_between(sample_sentence):
    assert punct_between(sample_sentence, 2, 2, 8) is True
    assert punct_between(sample_sentence, 2, 2, 1) is False
    assert punct_between(sample_sentence, 2, 1, 8) is True
    assert punct_between(sample_sentence, 2, 2, 8, punct_tags=frozenset()) is False


def _pair(n_src, m_tgt, links):
    tokens = [Token(i, f"s{i}", "X", 0 if i == 1 else 1, "root" if i == 1 else "dep")
              for i in range(1, n_src + 1)]
    return AlignedPair(DepSentence(tokens), [f"t{j}" for j in range(1, m_tgt + 1)], links)


def test_target_order_label():
    assert target_order_label(_pair(2, 2, {(1, 1), (2, 2)}), 1, 2) == 0
    assert target_order_label(_pair(2, 2, {(1, 2), (2, 1)}), 1, 2) == 1
    assert target_order_label(_pair(2, 2, {(1, 1)}), 1, 2) is None
    # both words share their leftmost target word
    assert target_order_label(_pair(2, 2, {(1, 1), (2, 1), (2, 2)}), 1, 2) is None
    # representative position is the minimum aligned index
    assert target_order_label(_pair(2, 3, {(1, 3), (1, 1), (2, 2)}), 1, 2) == 0


def test_sample_rows(sample_pair):
    hc = extract_head_child(sample_pair)
    sib = extract_sibling(sample_pair)
    for row in SAMPLE_HC:
        assert row in hc
    for row in SAMPLE_SIB:
        assert row in sib
    assert [r.label for r in SAMPLE_HC] == [0, 0, 1]
    assert [r.label for r in SAMPLE_SIB] == [0, 0, 1]


def test_punctuation_never_extracted(sample_pair):
    s = sample_pair.source
    punct_words = {s[i].surface for i in range(1, len(s) + 1) if s[i].pos == "PU"}
    # enumerate every arc and sibling pair touching punctuation and make sure none surfaces
    arcs = [(t.head, t.index) for t in s.tokens if t.head]
    assert any(s[c].pos == "PU" for _, c in arcs)
    for inst in extract_head_child(sample_pair):
        words = {inst.head[0], inst.child_left[0], inst.child_right[0]}
        assert not words & punct_words
    for inst in extract_sibling(sample_pair):
        assert inst.left[0] not in punct_words and inst.right[0] not in punct_words


def test_single_child_gives_no_siblings():
    tokens = [Token(1, "a", "X", 0, "root"), Token(2, "b", "X", 1, "dep")]
    pair = AlignedPair(DepSentence(tokens), ["x", "y"], {(1, 1), (2, 2)})
    assert extract_sibling(pair) == []
    assert len(extract_head_child(pair)) == 1


def test_instance_invariants():
    with pytest.raises(InstanceFormatError):
        HeadChildInstance(("h", "P", "l"), NULL_TRIPLE, NULL_TRIPLE, 1, False, 0)
    with pytest.raises(InstanceFormatError):
        HeadChildInstance(("h", "P", "l"), ("c", "P", "l"), NULL_TRIPLE, 1, False, 0)


def test_instance_file_round_trip(sample_pair, tmp_path):
    for rel, extract in (("head_child", extract_head_child), ("sibling", extract_sibling)):
        rows = extract(sample_pair)
        path = tmp_path / rel
        with open(path, "w") as f:
            write_instances(f, rel, rows)
        assert path.read_text().split("\n")[0] == rel
        assert read_instances(path) == (rel, rows)


def test_instance_file_errors(tmp_path):
    path = tmp_path / "bad"
    path.write_text("shuo\tVV\n")
    with pytest.raises(InstanceFormatError):
        read_instances(path)


# ----------------------------------------------------------------------
# properties over random aligned sentences

@st.composite
def aligned_pairs(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, 9))
    rng = np.random.default_rng(seed)
    tree = random_tree(rng, n)
    m = int(rng.integers(1, 12))
    links = {(int(i), int(rng.integers(1, m + 1))) for i in range(1, n + 1) if rng.random() < 0.85}
    return AlignedPair(tree, [f"t{j}" for j in range(m)], links)


def _mirror(pair):
    n = len(pair.source)
    flip = lambda i: 0 if i == 0 else n + 1 - i
    tokens = sorted(
        (Token(flip(t.index), t.surface, t.pos, flip(t.head), t.label) for t in pair.source.tokens),
        key=lambda t: t.index,
    )
    return AlignedPair(DepSentence(tokens), pair.target, {(flip(i), j) for i, j in pair.links}), flip


@settings(max_examples=60)
@given(aligned_pairs())
def test_mirroring_source_flips_distance(pair):
    mirrored, flip = _mirror(pair)
    s, t = pair.source, mirrored.source
    for tok in s.tokens:
        if tok.head:
            assert signed_distance(t, flip(tok.head), flip(tok.index)) == -signed_distance(s, tok.head, tok.index)
    before = sorted((i.head, i.dist) for i in extract_head_child(pair))
    after = sorted((i.head, -i.dist) for i in extract_head_child(mirrored))
    assert before == after


@settings(max_examples=60)
@given(aligned_pairs())
def test_sibling_pairs_unique_and_ordered(pair):
    # random trees use the surface form w<i> for position i
    s = pair.source
    positions = [(int(i.left[0][1:]), int(i.right[0][1:])) for i in extract_sibling(pair)]
    assert len(positions) == len(set(positions))
    assert all(a < b for a, b in positions)
    expected = {
        (a, b)
        for head in range(1, len(s) + 1)
        for a in children_of(s, head) for b in children_of(s, head)
        if a < b and "PU" not in (s[a].pos, s[b].pos) and target_order_label(pair, a, b) is not None
    }
    assert set(positions) == expected


@settings(max_examples=60)
@given(aligned_pairs())
def test_reversing_target_flips_labels(pair):
    # each source word carries at most one link here, so reversal is an exact mirror
    m = len(pair.target)
    reversed_pair = AlignedPair(pair.source, pair.target[::-1], {(i, m + 1 - j) for i, j in pair.links})
    s = pair.source
    for i in range(1, len(s) + 1):
        for j in range(i + 1, len(s) + 1):
            a = target_order_label(pair, i, j)
            b = target_order_label(reversed_pair, i, j)
            assert (a is None) == (b is None)
            if a is not None:
                assert b == 1 - a
