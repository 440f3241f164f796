"""Small n-gram language model with interpolated add-alpha smoothing.

    p_0(w)     = 1 / |V|
    p_k(w | h) = (c(h w) + alpha |V| p_{k-1}(w | h')) / (c(h .) + alpha |V|)

where h' drops the oldest word of h. ``V`` holds every training word plus
``</s>`` and ``<unk>``, so each conditional distribution sums to one.
"""

import math
from functools import lru_cache

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class NgramLM:
    def __init__(self, order, counts, vocab, alpha=0.1):
        if order < 1:
            raise ValueError("LM order must be >= 1")
        self.order = order
        self.alpha = alpha
        self.vocab = frozenset(vocab)
        self._counts = counts
        self._totals = [{h: sum(ws.values()) for h, ws in level.items()} for level in counts]
        self._prob = lru_cache(maxsize=None)(self._prob_uncached)

    @property
    def vocab_size(self):
        return len(self.vocab)

    def begin(self):
        return (BOS,) * (self.order - 1)

    def _prob_uncached(self, context, word):
        V = len(self.vocab)
        p = 1.0 / V
        for k in range(self.order):
            h = context[len(context) - k:] if k else ()
            c_h = self._totals[k].get(h, 0)
            c_hw = self._counts[k].get(h, {}).get(word, 0)
            p = (c_hw + self.alpha * V * p) / (c_h + self.alpha * V)
        return p

    def prob(self, context, word):
        if word not in self.vocab:
            word = UNK
        context = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        return self._prob(context, word)

    def score(self, state, word):
        """``(new_state, natural-log probability of word)``."""
        lp = math.log(self.prob(state, word))
        if self.order == 1:
            return (), lp
        return (tuple(state) + (word,))[-(self.order - 1):], lp

    def end(self, state):
        return math.log(self.prob(state, EOS))

    def sentence_logprob(self, words):
        state = self.begin()
        total = 0.0
        for w in words:
            state, lp = self.score(state, w)
            total += lp
        return total + self.end(state)


def train_lm(sentences, order=3, alpha=0.1):
    counts = [{} for _ in range(order)]
    vocab = {EOS, UNK}
    for words in sentences:
        vocab.update(words)
        padded = [BOS] * (order - 1) + list(words) + [EOS]
        for i in range(order - 1, len(padded)):
            w = padded[i]
            for k in range(order):
                h = tuple(padded[i - k:i])
                level = counts[k].setdefault(h, {})
                level[w] = level.get(w, 0) + 1
    return NgramLM(order, counts, vocab, alpha)
