"""Dependency-context word embeddings.

Every dependency arc becomes a five-token line

    label-of-head<GL>  grandhead<G>  head  child  label-of-child<L>

and a skip-gram model with negative sampling is trained on these lines with a
window of one, so a head word is predicted from its grandhead and its child,
and a child word from its head and its own label. The marked context tokens
get their own vocabulary slots and are removed after training.
"""

import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

NULL = "NULL"
UNK = "UNK"
ROOT = "ROOT"
ROOT_LABEL = "root"
CONTEXT_MARKERS = ("<GL>", "<G>", "<L>")


class EmbeddingFormatError(ValueError):
    pass


@dataclass
class EmbeddingTable:
    words: list
    vectors: np.ndarray
    # output-side vectors of a skip-gram model; only present on raw tables
    context_vectors: np.ndarray = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.words = list(self.words)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise EmbeddingFormatError(
                f"{len(self.words)} words but vector array of shape {self.vectors.shape}"
            )
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise EmbeddingFormatError("duplicate words in embedding table")

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __getitem__(self, word):
        return self.vectors[self.index[word]]

    def lookup(self, word):
        """Vector for ``word``, falling back to UNK (KeyError if the table has neither)."""
        i = self.index.get(word)
        if i is None:
            i = self.index[UNK]
        return self.vectors[i]

    def save(self, path, precision=6):
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{len(self.words)} {self.dim}\n")
            for w, v in zip(self.words, self.vectors):
                f.write(w + " " + " ".join(f"{x:.{precision}f}" for x in v) + "\n")

    @classmethod
    def load(cls, path, dim=None):
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise EmbeddingFormatError(f"{path}: header must be 'V D'")
            n, d = int(header[0]), int(header[1])
            if dim is not None and d != dim:
                raise EmbeddingFormatError(f"{path}: dimension {d}, expected {dim}")
            words, rows = [], []
            for lineno, line in enumerate(f, start=2):
                parts = line.rstrip("\n").split(" ")
                if len(parts) != d + 1:
                    raise EmbeddingFormatError(
                        f"{path}:{lineno}: expected {d} values, got {len(parts) - 1}"
                    )
                words.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if len(words) != n:
            raise EmbeddingFormatError(f"{path}: header announces {n} words, found {len(words)}")
        return cls(words, np.array(rows, dtype=np.float64).reshape(n, d))


@dataclass
class SkipGramConfig:
    dim: int = 100
    window: int = 1
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_count: int = 1
    seed: int = 1
    # >1 trains shards concurrently with unsynchronised updates (not reproducible)
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim, window and negatives must all be >= 1")


def gen_dep_context_corpus(sentences, include_root_arc=True):
    """One five-token line per dependency arc."""
    lines = []
    for s in sentences:
        for tok in s.tokens:
            if tok.head == 0:
                if include_root_arc:
                    lines.append([ROOT_LABEL + "<GL>", ROOT + "<G>", ROOT,
                                  tok.surface, tok.label + "<L>"])
                continue
            head = s[tok.head]
            grand = ROOT if head.head == 0 else s[head.head].surface
            lines.append([head.label + "<GL>", grand + "<G>", head.surface,
                          tok.surface, tok.label + "<L>"])
    return lines


def is_context_token(word):
    return word.endswith(CONTEXT_MARKERS)


def build_vocab(corpus, min_count=1):
    """Words with frequency >= min_count, most frequent first, ties alphabetical."""
    counts = {}
    for line in corpus:
        for w in line:
            counts[w] = counts.get(w, 0) + 1
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return [w for w, _ in kept], np.array([c for _, c in kept], dtype=np.float64)


def noise_distribution(counts, power=0.75):
    p = counts ** power
    return p / p.sum()


def context_pairs(ids, window):
    """(center, context) index arrays for one encoded line."""
    n = len(ids)
    centers, contexts = [], []
    for i in range(n):
        for j in range(max(0, i - window), min(n, i + window + 1)):
            if j != i:
                centers.append(ids[i])
                contexts.append(ids[j])
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _sgd_line(w_in, w_out, centers, contexts, cum_noise, negatives, lr, rng):
    if len(centers) == 0:
        return
    neg = np.searchsorted(cum_noise, rng.random((len(centers), negatives)), side="right")
    neg = np.minimum(neg, len(cum_noise) - 1)
    v = w_in[centers]
    u_pos = w_out[contexts]
    u_neg = w_out[neg]
    g_pos = _sigmoid(np.einsum("pd,pd->p", v, u_pos)) - 1.0
    g_neg = _sigmoid(np.einsum("pd,pkd->pk", v, u_neg))
    grad_v = g_pos[:, None] * u_pos + np.einsum("pk,pkd->pd", g_neg, u_neg)
    np.add.at(w_out, contexts, -lr * g_pos[:, None] * v)
    np.add.at(w_out, neg.ravel(), -lr * (g_neg[:, :, None] * v[:, None, :]).reshape(-1, v.shape[1]))
    np.add.at(w_in, centers, -lr * grad_v)


def train_skipgram(corpus, cfg):
    """Skip-gram with negative sampling; returns a raw table that still holds context tokens.

    Lines are sorted before the seeded per-epoch shuffle, so the result does
    not depend on the order of ``corpus`` when ``cfg.workers == 1``.
    """
    words, counts = build_vocab(corpus, cfg.min_count)
    if not words:
        raise ValueError("empty vocabulary after min_count filtering")
    index = {w: i for i, w in enumerate(words)}
    encoded = sorted(
        tuple(index[w] for w in line if w in index) for line in corpus
    )
    pairs = [context_pairs(ids, cfg.window) for ids in encoded]
    cum_noise = np.cumsum(noise_distribution(counts))

    rng = np.random.default_rng(cfg.seed)
    half = 0.5 / cfg.dim
    w_in = rng.uniform(-half, half, size=(len(words), cfg.dim))
    w_out = np.zeros((len(words), cfg.dim))

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        if cfg.workers <= 1:
            for k in order:
                _sgd_line(w_in, w_out, *pairs[k], cum_noise, cfg.negatives, cfg.learning_rate, rng)
        else:
            shards = np.array_split(order, cfg.workers)
            seeds = rng.integers(0, 2**63, size=len(shards))

            def run(shard, seed):
                local = np.random.default_rng(seed)
                for k in shard:
                    _sgd_line(w_in, w_out, *pairs[k], cum_noise, cfg.negatives,
                              cfg.learning_rate, local)

            threads = [threading.Thread(target=run, args=(sh, sd)) for sh, sd in zip(shards, seeds)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        log.debug("skip-gram epoch %d done", epoch + 1)

    return EmbeddingTable(words, w_in, context_vectors=w_out)


def with_specials(words, vectors):
    """Append NULL (zero vector) and UNK (centroid of the given vectors)."""
    vectors = np.asarray(vectors, dtype=np.float64)
    dim = vectors.shape[1]
    unk = vectors.mean(axis=0) if len(words) else np.zeros(dim)
    return EmbeddingTable(words + [NULL, UNK], np.vstack([vectors, np.zeros((1, dim)), unk[None, :]]))


def filter_context_vocab(raw):
    keep = [i for i, w in enumerate(raw.words) if not is_context_token(w) and w not in (NULL, UNK)]
    return with_specials([raw.words[i] for i in keep], raw.vectors[keep].copy())


def init_range(dim):
    return math.sqrt(6.0 / dim)


def random_table(vocab, dim, seed):
    words = list(dict.fromkeys(w for w in vocab if w not in (NULL, UNK)))
    r = init_range(dim)
    rng = np.random.default_rng(seed)
    return with_specials(words, rng.uniform(-r, r, size=(len(words), dim)))
