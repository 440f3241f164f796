"""Phrase-based stack decoding with dependency reordering features.

Hypotheses are grouped into stacks by the number of covered source words.
A hypothesis is extended with any uncovered source span that lies inside the
first not-yet-finished punctuation zone and respects the distortion limit.
Hypotheses agreeing on coverage, end of the last span and LM state are
recombined, since every feature's future contribution depends only on those.
There is no future-cost estimate; wide beams are expected at this scale.
"""

from dataclasses import dataclass, field

import numpy as np

from depreorder.decoder.features import (
    NR_PREFIX,
    dbr_penalty,
    ddp_penalty,
    ds_value,
    linked_pairs,
    nr_member_names,
    orientation,
    orientation_logprob,
    pair_query,
    weight_of,
    zones,
)
from depreorder.decoder.phrases import MAX_PHRASE_LEN
from depreorder.extract import DEFAULT_PUNCT_TAGS
from depreorder.network import predict_swap

BASE_FEATURES = (
    "tm0", "tm1", "tm2", "tm3", "lm", "word_penalty", "phrase_penalty",
    "dbr", "ddp", "ds",
)


class DecodeError(RuntimeError):
    pass


@dataclass
class LogLinearConfig:
    weights: dict = field(default_factory=dict)
    distortion_limit: int = 14  # None means unlimited
    beam_size: int = 100
    punct_tags: frozenset = DEFAULT_PUNCT_TAGS
    ds_weights: dict = field(default_factory=dict)
    # relation -> list of ReorderNet
    ensembles: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.distortion_limit is not None and self.distortion_limit < 0:
            raise ValueError("distortion_limit must be >= 0")
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")

    def feature_names(self):
        return list(BASE_FEATURES) + nr_member_names(self.ensembles)

    def weight_vector(self):
        return np.array([weight_of(self.weights, n) for n in self.feature_names()])


@dataclass(eq=False)
class Hypothesis:
    coverage: int
    last_span: tuple
    lm_state: tuple
    scores: np.ndarray
    total: float
    back: "Hypothesis" = None
    entry: object = None

    def derivation(self):
        """``[(span, PhraseEntry)]`` from the first phrase to the last."""
        steps = []
        h = self
        while h.back is not None:
            steps.append((h.last_span, h.entry))
            h = h.back
        return steps[::-1]

    @property
    def output(self):
        return [w for _, entry in self.derivation() for w in entry.target]

    def covered(self):
        return _covered_set(self.coverage)


@dataclass
class DecodeResult:
    best: Hypothesis
    kbest: list
    feature_names: list


class SentenceModel:
    """Per-sentence precomputation: zones, linked pairs and cached pair feature values."""

    def __init__(self, tree, table, cfg):
        self.tree = tree
        self.n = len(tree)
        self.cfg = cfg
        self.names = cfg.feature_names()
        self.slot = {name: k for k, name in enumerate(self.names)}
        self.zone_masks = [_mask(s, e) for s, e in zones(tree, cfg.punct_tags)]
        self.full = _mask(1, self.n)
        self.links = {i: [] for i in range(1, self.n + 1)}
        for a, b in linked_pairs(tree, cfg.punct_tags):
            self.links[a].append(b)
            self.links[b].append(a)
        self.options = {}
        for s, e in _zone_spans(self.zone_masks, self.n):
            entries = table.lookup(tree.words[s - 1:e])
            if entries:
                self.options[(s, e)] = entries
        self._pair_cache = {}
        self._swap_prob = {}

    def _p_swap(self, rel, k, a, b):
        # predictions do not depend on the hypothesis, so caching per pair is exact
        key = (rel, k, a, b)
        if key not in self._swap_prob:
            _, query = pair_query(self.tree, a, b, self.cfg.punct_tags)
            self._swap_prob[key] = predict_swap(self.cfg.ensembles[rel][k], query)
        return self._swap_prob[key]

    def pair_delta(self, x, x_prime):
        """Feature vector contribution of translating ``x`` while ``x_prime`` is untranslated."""
        key = (x, x_prime)
        if key not in self._pair_cache:
            delta = np.zeros(len(self.names))
            delta[self.slot["ds"]] = ds_value(self.tree, x, x_prime, self.cfg.ds_weights)
            rel, _ = pair_query(self.tree, x, x_prime, self.cfg.punct_tags)
            o = orientation(x, x_prime)
            a, b = sorted((x, x_prime))
            for k in range(len(self.cfg.ensembles.get(rel, ()))):
                p = self._p_swap(rel, k, a, b)
                delta[self.slot[f"{NR_PREFIX[rel]}.{k}"]] = orientation_logprob(p, o)
            self._pair_cache[key] = delta
        return self._pair_cache[key]

    def active_zone(self, coverage):
        for zm in self.zone_masks:
            if coverage & zm != zm:
                return zm
        return 0


def _mask(s, e):
    return ((1 << (e + 1)) - 1) ^ ((1 << s) - 1)


def _zone_spans(zone_masks, n):
    for zm in zone_masks:
        idx = [i for i in range(1, n + 1) if zm >> i & 1]
        lo, hi = idx[0], idx[-1]
        for s in range(lo, hi + 1):
            for e in range(s, min(hi, s + MAX_PHRASE_LEN - 1) + 1):
                yield s, e


def _covered_set(coverage):
    return {i for i in range(1, coverage.bit_length()) if coverage >> i & 1}


def decode(tree, table, lm, cfg, kbest=1, name=None):
    """Best translation of a parsed source sentence (plus up to ``kbest`` final hypotheses)."""
    table = table.with_passthrough(tree.words)
    model = SentenceModel(tree, table, cfg)
    w = cfg.weight_vector()
    slot = model.slot
    n_feat = len(model.names)

    start = Hypothesis(0, None, lm.begin(), np.zeros(n_feat), 0.0)
    stacks = [dict() for _ in range(model.n + 1)]
    stacks[0][(0, 0, start.lm_state)] = start

    for k in range(model.n):
        ranked = sorted(stacks[k].values(), key=lambda h: -h.total)[: cfg.beam_size]
        for hyp in ranked:
            zone = model.active_zone(hyp.coverage)
            prev_end = hyp.last_span[1] if hyp.last_span else 0
            covered = _covered_set(hyp.coverage)
            for (s, e), entries in model.options.items():
                span_mask = _mask(s, e)
                if span_mask & hyp.coverage or span_mask & zone != span_mask:
                    continue
                dist = dbr_penalty(hyp.last_span, (s, e))
                if cfg.distortion_limit is not None and dist > cfg.distortion_limit:
                    continue
                new_cov = hyp.coverage | span_mask
                base = np.zeros(n_feat)
                base[slot["dbr"]] = dist
                base[slot["ddp"]] = ddp_penalty(tree, covered, (s, e), prev_end)
                base[slot["phrase_penalty"]] = 1
                for x in range(s, e + 1):
                    for x2 in model.links[x]:
                        if not new_cov >> x2 & 1:
                            base += model.pair_delta(x, x2)
                done = new_cov == model.full
                for entry in entries:
                    delta = base.copy()
                    delta[slot["tm0"]:slot["tm3"] + 1] = entry.scores
                    delta[slot["word_penalty"]] = len(entry.target)
                    state = hyp.lm_state
                    lm_total = 0.0
                    for word in entry.target:
                        state, lp = lm.score(state, word)
                        lm_total += lp
                    if done:
                        lm_total += lm.end(state)
                    delta[slot["lm"]] = lm_total
                    total = hyp.total + float(w @ delta)
                    key = (new_cov, e, state)
                    stack = stacks[k + e - s + 1]
                    old = stack.get(key)
                    if old is None or total > old.total:
                        stack[key] = Hypothesis(new_cov, (s, e), state, hyp.scores + delta,
                                                total, hyp, entry)

    final = sorted(stacks[model.n].values(), key=lambda h: -h.total)
    if not final:
        label = name if name is not None else " ".join(tree.words)
        raise DecodeError(f"no complete hypothesis for sentence {label!r} "
                          f"(distortion limit {cfg.distortion_limit})")
    return DecodeResult(final[0], final[:kbest], model.names)


def rescore(tree, derivation, lm, cfg):
    """Recompute every feature value of a complete derivation from scratch.

    ``derivation`` is a list of ``(span, PhraseEntry)``. The result maps feature
    names to values; weighting it with ``cfg.weights`` reproduces the total
    reported by :func:`decode`.
    """
    names = cfg.feature_names()
    values = dict.fromkeys(names, 0.0)
    pairs = linked_pairs(tree, cfg.punct_tags)
    covered = set()
    prev_span = None
    output = []
    for span, entry in derivation:
        s, e = span
        values["dbr"] += dbr_penalty(prev_span, span)
        if prev_span is not None:
            values["ddp"] += ddp_penalty(tree, covered, span, prev_span[1])
        for k in range(4):
            values[f"tm{k}"] += entry.scores[k]
        values["word_penalty"] += len(entry.target)
        values["phrase_penalty"] += 1
        now = set(range(s, e + 1))
        after = covered | now
        for x in sorted(now):
            if tree[x].pos in cfg.punct_tags:
                continue
            for a, b in pairs:
                if x not in (a, b):
                    continue
                x2 = b if a == x else a
                if x2 in after:
                    continue
                values["ds"] += ds_value(tree, x, x2, cfg.ds_weights)
                rel, query = pair_query(tree, x, x2, cfg.punct_tags)
                o = orientation(x, x2)
                for k, net in enumerate(cfg.ensembles.get(rel, ())):
                    values[f"{NR_PREFIX[rel]}.{k}"] += orientation_logprob(predict_swap(net, query), o)
        covered = after
        prev_span = span
        output.extend(entry.target)
    values["lm"] = lm.sentence_logprob(output)
    return values


def weighted_total(values, cfg):
    return sum(weight_of(cfg.weights, name) * v for name, v in values.items())


def trace_record(tree, result, cfg, index=None):
    """JSON-ready per-feature breakdown of the k-best hypotheses of one sentence."""
    entries = []
    for hyp in result.kbest:
        entries.append({
            "total": hyp.total,
            "output": hyp.output,
            "features": dict(zip(result.feature_names, hyp.scores.tolist())),
            "derivation": [
                {"span": list(span), "source": list(entry.source), "target": list(entry.target),
                 "scores": list(entry.scores)}
                for span, entry in hyp.derivation()
            ],
        })
    return {
        "sentence": index,
        "source": tree.words,
        "weights": {n: weight_of(cfg.weights, n) for n in result.feature_names},
        "hypotheses": entries,
    }
