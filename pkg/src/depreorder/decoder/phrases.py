"""Phrase table: ``src ||| tgt ||| s1 s2 s3 s4`` with log10 scores."""

import math
from dataclasses import dataclass

MAX_PHRASE_LEN = 7
N_SCORES = 4
# log10 score given to each of the four scores of an identity entry for an unknown word
PASSTHROUGH_LOG10 = -10.0
LN10 = math.log(10.0)


class PhraseTableError(ValueError):
    pass


@dataclass(frozen=True)
class PhraseEntry:
    source: tuple
    target: tuple
    scores: tuple  # natural-log forward/backward phrase and lexical scores

    def __post_init__(self):
        if not 1 <= len(self.source) <= MAX_PHRASE_LEN:
            raise PhraseTableError(f"source phrase length {len(self.source)} outside 1..{MAX_PHRASE_LEN}")
        if len(self.scores) != N_SCORES or not all(math.isfinite(s) for s in self.scores):
            raise PhraseTableError(f"need {N_SCORES} finite scores, got {self.scores}")


class PhraseTable:
    def __init__(self, entries=()):
        self._table = {}
        for e in entries:
            self.add(e)

    def add(self, entry):
        self._table.setdefault(entry.source, []).append(entry)

    def lookup(self, source):
        return self._table.get(tuple(source), [])

    def __contains__(self, source):
        return tuple(source) in self._table

    def __len__(self):
        return sum(len(v) for v in self._table.values())

    def entries(self):
        for src in self._table:
            yield from self._table[src]

    def with_passthrough(self, words):
        """Copy of the table with identity entries for words lacking a one-word entry."""
        table = PhraseTable(self.entries())
        for w in dict.fromkeys(words):
            if (w,) not in table:
                table.add(PhraseEntry((w,), (w,), (PASSTHROUGH_LOG10 * LN10,) * N_SCORES))
        return table


def parse_phrase_line(line, lineno=None):
    where = f"line {lineno}: " if lineno is not None else ""
    parts = [p.strip() for p in line.split("|||")]
    if len(parts) != 3:
        raise PhraseTableError(f"{where}expected 'src ||| tgt ||| scores'")
    src, tgt = tuple(parts[0].split()), tuple(parts[1].split())
    try:
        scores = tuple(float(x) * LN10 for x in parts[2].split())
    except ValueError:
        raise PhraseTableError(f"{where}non-numeric score") from None
    if not src or not tgt:
        raise PhraseTableError(f"{where}empty source or target phrase")
    try:
        return PhraseEntry(src, tgt, scores)
    except PhraseTableError as exc:
        raise PhraseTableError(f"{where}{exc}") from None


def format_phrase_line(entry):
    scores = " ".join(repr(s / LN10) for s in entry.scores)
    return f"{' '.join(entry.source)} ||| {' '.join(entry.target)} ||| {scores}"


def load_phrase_table(path):
    table = PhraseTable()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                table.add(parse_phrase_line(line, lineno))
            except PhraseTableError as exc:
                raise PhraseTableError(f"{path}: {exc}") from None
    return table
