"""Reading dependency-parsed sentences, target text and word alignments.

Parse files use an 8-column CoNLL-style layout (ID, FORM, LEMMA, CPOS, POS,
FEATS, HEAD, DEPREL); extra columns are tolerated and ignored. Alignment
lines hold 0-based ``i-j`` pairs and are shifted to 1-based indices here so
that they line up with token indices.
"""

from dataclasses import dataclass
from functools import cached_property


class CorpusFormatError(ValueError):
    """A line in an input file could not be parsed."""


class TreeStructureError(ValueError):
    """Head links of a sentence do not form a tree."""


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    pos: str
    head: int
    label: str

    def __post_init__(self):
        if self.index < 1:
            raise TreeStructureError(f"token index must be >= 1, got {self.index}")
        if self.head < 0:
            raise TreeStructureError(f"token {self.index}: negative head {self.head}")
        if self.head == self.index:
            raise TreeStructureError(f"token {self.index} is its own head")
        if not self.surface:
            raise TreeStructureError(f"token {self.index}: empty surface form")


@dataclass(frozen=True)
class DepSentence:
    tokens: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        _validate_tree(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def __getitem__(self, i):
        """Token at 1-based position ``i``."""
        if not 1 <= i <= len(self.tokens):
            raise IndexError(f"token index {i} out of range 1..{len(self.tokens)}")
        return self.tokens[i - 1]

    @property
    def root_index(self):
        for tok in self.tokens:
            if tok.head == 0:
                return tok.index

    @property
    def words(self):
        return [tok.surface for tok in self.tokens]

    @cached_property
    def _children(self):
        kids = {i: [] for i in range(len(self.tokens) + 1)}
        for tok in self.tokens:
            kids[tok.head].append(tok.index)
        return {k: tuple(v) for k, v in kids.items()}

    @cached_property
    def _spans(self):
        spans = {}

        def visit(i):
            span = {i}
            for c in self._children[i]:
                span |= visit(c)
            spans[i] = frozenset(span)
            return span

        visit(self.root_index)
        return spans


def _validate_tree(tokens):
    n = len(tokens)
    if n == 0:
        raise TreeStructureError("sentence has no tokens")
    for pos, tok in enumerate(tokens, start=1):
        if tok.index != pos:
            raise TreeStructureError(f"token indices not contiguous: expected {pos}, got {tok.index}")
        if tok.head > n:
            raise TreeStructureError(f"token {tok.index}: head {tok.head} beyond sentence length {n}")
    roots = [tok.index for tok in tokens if tok.head == 0]
    if len(roots) != 1:
        raise TreeStructureError(f"expected exactly one root, found {len(roots)}")
    # every token must reach the root without revisiting a node
    for tok in tokens:
        seen = set()
        cur = tok.index
        while cur != 0:
            if cur in seen:
                raise TreeStructureError(f"cycle through token {cur}")
            seen.add(cur)
            cur = tokens[cur - 1].head


@dataclass(frozen=True)
class AlignedPair:
    source: DepSentence
    target: tuple
    links: frozenset

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "links", frozenset(self.links))
        n, m = len(self.source), len(self.target)
        for i, j in self.links:
            if not (1 <= i <= n and 1 <= j <= m):
                raise CorpusFormatError(f"link ({i},{j}) outside sentence lengths {n}x{m}")


def children_of(s, i):
    """Dependents of token ``i`` in surface order."""
    s[i]  # bounds check
    return list(s._children[i])


def subtree_span(s, i):
    """Token ``i`` together with all of its descendants."""
    s[i]  # bounds check
    return set(s._spans[i])


def parent_of(s, i):
    return s[i].head


def siblings_of(s, i):
    head = s[i].head
    if head == 0:
        return []
    return [c for c in s._children[head] if c != i]


def linked_words(s, i):
    """Head, children and siblings of ``i``; the artificial root is excluded."""
    out = set(children_of(s, i)) | set(siblings_of(s, i))
    if s[i].head:
        out.add(s[i].head)
    return sorted(out)


def parse_conll(text, name="<string>"):
    """Parse blank-line separated CoNLL blocks into a list of DepSentence."""
    sentences = []
    block = []
    block_start = None

    def flush():
        if not block:
            return
        try:
            sentences.append(DepSentence(block))
        except TreeStructureError as exc:
            raise TreeStructureError(
                f"{name}: sentence {len(sentences) + 1} (line {block_start}): {exc}"
            ) from None

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            block = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise CorpusFormatError(f"{name}:{lineno}: expected >= 8 tab-separated columns, got {len(cols)}")
        try:
            index, head = int(cols[0]), int(cols[6])
        except ValueError:
            raise CorpusFormatError(f"{name}:{lineno}: non-integer ID or HEAD column") from None
        if not block:
            block_start = lineno
        try:
            block.append(Token(index, cols[1], cols[4], head, cols[7]))
        except TreeStructureError as exc:
            raise TreeStructureError(f"{name}: sentence {len(sentences) + 1} (line {lineno}): {exc}") from None
    flush()
    return sentences


def format_conll(sentences):
    """Serialize sentences back to the 8-column layout."""
    blocks = []
    for s in sentences:
        lines = [
            f"{t.index}\t{t.surface}\t_\t{t.pos}\t{t.pos}\t_\t{t.head}\t{t.label}"
            for t in s.tokens
        ]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def read_conll(path):
    with open(path, encoding="utf-8") as f:
        return parse_conll(f.read(), name=str(path))


def parse_alignment(line, src_len, tgt_len):
    """Turn a line of 0-based ``i-j`` pairs into a set of 1-based links."""
    links = set()
    for item in line.split():
        try:
            i, j = (int(x) for x in item.split("-"))
        except ValueError:
            raise CorpusFormatError(f"malformed alignment pair {item!r}") from None
        if not (0 <= i < src_len and 0 <= j < tgt_len):
            raise CorpusFormatError(
                f"alignment pair {item!r} out of range for lengths {src_len}, {tgt_len}"
            )
        links.add((i + 1, j + 1))
    return links


def format_alignment(links):
    return " ".join(f"{i - 1}-{j - 1}" for i, j in sorted(links))


def read_lines(path):
    """Lines of a text file; a trailing newline does not add an empty line."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    if not text:
        return []
    lines = text.split("\n")
    if text.endswith("\n"):
        lines.pop()
    return lines


def read_target(path):
    return [line.split() for line in read_lines(path)]


def read_aligned_corpus(parse_path, align_path, target_path):
    """Zip parse, alignment and target files (aligned by line/sentence number)."""
    sources = read_conll(parse_path)
    targets = read_target(target_path)
    align_lines = read_lines(align_path)
    if not (len(sources) == len(targets) == len(align_lines)):
        raise CorpusFormatError(
            f"corpus size mismatch: {len(sources)} parses, {len(targets)} targets, "
            f"{len(align_lines)} alignment lines"
        )
    pairs = []
    for k, (src, tgt, line) in enumerate(zip(sources, targets, align_lines), start=1):
        try:
            links = parse_alignment(line, len(src), len(tgt))
        except CorpusFormatError as exc:
            raise CorpusFormatError(f"{align_path}:{k}: {exc}") from None
        pairs.append(AlignedPair(src, tgt, links))
    return pairs
