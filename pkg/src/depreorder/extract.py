"""Head-child and sibling reordering instances from word-aligned parses.

Each instance describes two source words linked in the dependency tree and
carries a binary label: 1 if their aligned target words appear in the
opposite order (swapped), 0 if they keep the source order.
"""

from dataclasses import dataclass
from itertools import combinations

from depreorder.corpus_io import children_of

NULL = "NULL"
DEFAULT_PUNCT_TAGS = frozenset({"PU"})
NULL_TRIPLE = (NULL, NULL, NULL)

HEAD_CHILD = "head_child"
SIBLING = "sibling"
RELATIONS = (HEAD_CHILD, SIBLING)


class InstanceFormatError(ValueError):
    pass


def format_distance(d):
    return NULL if d is None else f"{d:+d}"


def parse_distance(text):
    if text == NULL:
        return None
    d = int(text)
    if d not in (-2, -1, 1, 2):
        raise InstanceFormatError(f"invalid distance category {text!r}")
    return d


@dataclass(frozen=True)
class HeadChildInstance:
    head: tuple
    child_left: tuple
    child_right: tuple
    dist: int
    punct: bool
    label: int = None

    def __post_init__(self):
        left_null = self.child_left == NULL_TRIPLE
        right_null = self.child_right == NULL_TRIPLE
        if left_null == right_null:
            raise InstanceFormatError("exactly one child slot must be filled")
        if (self.dist < 0) != (not left_null):
            raise InstanceFormatError(f"distance {self.dist:+d} disagrees with the filled child slot")

    def slots(self):
        return [
            *self.head, *self.child_left, *self.child_right,
            format_distance(self.dist), str(int(self.punct)),
        ]

    def to_row(self):
        return "\t".join(self.slots() + [str(self.label)])

    @classmethod
    def from_row(cls, line):
        f = line.rstrip("\n").split("\t")
        if len(f) != 12:
            raise InstanceFormatError(f"head-child row needs 12 fields, got {len(f)}")
        return cls(tuple(f[0:3]), tuple(f[3:6]), tuple(f[6:9]),
                   parse_distance(f[9]), f[10] == "1", int(f[11]))


@dataclass(frozen=True)
class SiblingInstance:
    left: tuple
    right: tuple
    head: tuple
    punct: bool
    label: int = None

    def slots(self):
        lw, lp, ll, ld = self.left
        rw, rp, rl, rd = self.right
        return [lw, lp, ll, format_distance(ld), rw, rp, rl, format_distance(rd),
                *self.head, str(int(self.punct))]

    def to_row(self):
        return "\t".join(self.slots() + [str(self.label)])

    @classmethod
    def from_row(cls, line):
        f = line.rstrip("\n").split("\t")
        if len(f) != 12:
            raise InstanceFormatError(f"sibling row needs 12 fields, got {len(f)}")
        return cls((f[0], f[1], f[2], parse_distance(f[3])),
                   (f[4], f[5], f[6], parse_distance(f[7])),
                   (f[8], f[9]), f[10] == "1", int(f[11]))


def signed_distance(s, head, child):
    """Categorical signed distance of ``child`` from ``head``: -2, -1, +1 or +2."""
    kids = children_of(s, head)
    if child not in kids:
        raise ValueError(f"token {child} is not a dependent of token {head}")
    lo, hi = sorted((head, child))
    between = any(lo < k < hi for k in kids if k != child)
    magnitude = 2 if between else 1
    return -magnitude if child < head else magnitude


def punct_between(s, head, a, b, punct_tags=DEFAULT_PUNCT_TAGS):
    lo, hi = sorted((a, b))
    return any(lo < k < hi and s[k].pos in punct_tags for k in children_of(s, head))


def target_order_label(pair, i, j):
    """1 if the target words of ``i`` and ``j`` are swapped, 0 if in order, None to skip.

    A source word is represented by its leftmost aligned target word.
    """
    ri = min((t for s, t in pair.links if s == i), default=None)
    rj = min((t for s, t in pair.links if s == j), default=None)
    if ri is None or rj is None or ri == rj:
        return None
    if (ri < rj) == (i < j):
        return 0
    return 1


def _triple(s, i):
    t = s[i]
    return (t.surface, t.pos, t.label)


def head_child_instance(s, head, child, punct_tags=DEFAULT_PUNCT_TAGS, label=None):
    dist = signed_distance(s, head, child)
    child_feats = _triple(s, child)
    left, right = (child_feats, NULL_TRIPLE) if child < head else (NULL_TRIPLE, child_feats)
    return HeadChildInstance(_triple(s, head), left, right, dist,
                             punct_between(s, head, head, child, punct_tags), label)


def sibling_instance(s, a, b, punct_tags=DEFAULT_PUNCT_TAGS, label=None):
    left, right = sorted((a, b))
    head = s[left].head
    if head == 0 or s[right].head != head:
        raise ValueError(f"tokens {a} and {b} are not siblings")
    h = s[head]
    return SiblingInstance(
        _triple(s, left) + (signed_distance(s, head, left),),
        _triple(s, right) + (signed_distance(s, head, right),),
        (h.surface, h.pos),
        punct_between(s, head, left, right, punct_tags),
        label,
    )


def _is_punct(s, i, punct_tags):
    return s[i].pos in punct_tags


def extract_head_child(pair, punct_tags=DEFAULT_PUNCT_TAGS):
    s = pair.source
    arcs = sorted((t.head, t.index) for t in s.tokens if t.head != 0)
    out = []
    for head, child in arcs:
        if _is_punct(s, head, punct_tags) or _is_punct(s, child, punct_tags):
            continue
        label = target_order_label(pair, min(head, child), max(head, child))
        if label is None:
            continue
        out.append(head_child_instance(s, head, child, punct_tags, label))
    return out


def extract_sibling(pair, punct_tags=DEFAULT_PUNCT_TAGS):
    s = pair.source
    out = []
    for head in range(1, len(s) + 1):
        kids = [k for k in children_of(s, head) if not _is_punct(s, k, punct_tags)]
        for left, right in combinations(kids, 2):
            label = target_order_label(pair, left, right)
            if label is None:
                continue
            out.append(sibling_instance(s, left, right, punct_tags, label))
    return out


def extract_all(pairs, punct_tags=DEFAULT_PUNCT_TAGS):
    hc, sib = [], []
    for p in pairs:
        hc.extend(extract_head_child(p, punct_tags))
        sib.extend(extract_sibling(p, punct_tags))
    return hc, sib


def write_instances(f, relation, instances):
    f.write(relation + "\n")
    for inst in instances:
        f.write(inst.to_row() + "\n")


def read_instances(path):
    """Return ``(relation, instances)`` from an instance file."""
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f.read().split("\n") if line]
    if not lines or lines[0] not in RELATIONS:
        raise InstanceFormatError(f"{path}: first line must name the relation type")
    cls = HeadChildInstance if lines[0] == HEAD_CHILD else SiblingInstance
    try:
        return lines[0], [cls.from_row(line) for line in lines[1:]]
    except (InstanceFormatError, ValueError) as exc:
        raise InstanceFormatError(f"{path}: {exc}") from None
