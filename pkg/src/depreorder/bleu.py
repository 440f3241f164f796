"""Corpus-level BLEU with the shortest-reference brevity penalty.

No smoothing: a zero n-gram match count for any order gives a score of 0.
"""

import math
from collections import Counter


def ngrams(words, n):
    return Counter(tuple(words[i:i + n]) for i in range(len(words) - n + 1))


def bleu_stats(hypotheses, reference_sets, max_n=4, case_insensitive=True):
    """``(matches[n], totals[n], hyp_length, ref_length)`` summed over segments."""
    if not hypotheses:
        raise ValueError("BLEU needs at least one hypothesis")
    if len(hypotheses) != len(reference_sets):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(reference_sets)} reference sets")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, refs in zip(hypotheses, reference_sets):
        if not refs:
            raise ValueError("every hypothesis needs at least one reference")
        if case_insensitive:
            hyp = [w.lower() for w in hyp]
            refs = [[w.lower() for w in r] for r in refs]
        hyp_len += len(hyp)
        ref_len += min(len(r) for r in refs)
        for n in range(1, max_n + 1):
            counts = ngrams(hyp, n)
            max_ref = Counter()
            for r in refs:
                max_ref |= ngrams(r, n)
            matches[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    return matches, totals, hyp_len, ref_len


def bleu(hypotheses, reference_sets, max_n=4, case_insensitive=True):
    """BLEU in [0, 1]; ``reference_sets[i]`` is the list of tokenized references of segment i."""
    matches, totals, c, r = bleu_stats(hypotheses, reference_sets, max_n, case_insensitive)
    if c == 0 or any(m == 0 for m in matches):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    brevity = min(0.0, 1.0 - r / c)
    return math.exp(log_precision + brevity)
