"""Feed-forward swap classifiers for head-child and sibling word pairs.

Each input slot (word, POS tag, dependency label, distance category or
punctuation flag) is looked up in a per-kind embedding table; the
concatenated vectors pass through two relu layers and a sigmoid unit that
gives the probability that the pair is swapped in the translation.
Everything, backpropagation included, is plain numpy in float64.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from depreorder.embeddings import NULL, UNK, init_range
from depreorder.extract import HEAD_CHILD, SIBLING

log = logging.getLogger(__name__)

EPS = 1e-12
MODEL_MAGIC = "depreorder-model"
MODEL_VERSION = 1

KINDS = ("word", "pos", "label", "distance", "boolean")
FIXED_VOCABS = {
    "distance": ["-2", "-1", "+1", "+2", NULL],
    "boolean": ["0", "1"],
}


class TrainingError(RuntimeError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSpec:
    relation: str
    slots: tuple

    @property
    def kinds(self):
        return [kind for _, kind in self.slots]


HEAD_CHILD_SPEC = FeatureSpec(HEAD_CHILD, (
    ("head_word", "word"), ("head_pos", "pos"), ("head_label", "label"),
    ("left_word", "word"), ("left_pos", "pos"), ("left_label", "label"),
    ("right_word", "word"), ("right_pos", "pos"), ("right_label", "label"),
    ("dist", "distance"), ("punct", "boolean"),
))

SIBLING_SPEC = FeatureSpec(SIBLING, (
    ("left_word", "word"), ("left_pos", "pos"), ("left_label", "label"), ("left_dist", "distance"),
    ("right_word", "word"), ("right_pos", "pos"), ("right_label", "label"), ("right_dist", "distance"),
    ("head_word", "word"), ("head_pos", "pos"),
    ("punct", "boolean"),
))

SPECS = {HEAD_CHILD: HEAD_CHILD_SPEC, SIBLING: SIBLING_SPEC}


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    # when set, overrides batch_size so that each epoch has this many batches
    batches_per_epoch: int = None
    learning_rate: float = 0.05
    dropout: float = 0.5
    seed: int = 1
    vocab_limit: int = 100000
    dim: int = 100
    hidden1: int = 200
    hidden2: int = 100

    def __post_init__(self):
        if not 0 <= self.dropout < 1:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.batches_per_epoch is not None and self.batches_per_epoch < 1:
            raise ValueError("batches_per_epoch must be >= 1")


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def build_vocabs(spec, instances, vocab_limit=100000):
    """Symbol lists per feature kind, most frequent first; words capped at vocab_limit."""
    counts = {kind: {} for kind in ("word", "pos", "label")}
    for inst in instances:
        for sym, kind in zip(inst.slots(), spec.kinds):
            if kind in counts and sym != NULL:
                counts[kind][sym] = counts[kind].get(sym, 0) + 1
    vocabs = {}
    for kind, c in counts.items():
        ranked = sorted((sym for sym in c if sym != UNK), key=lambda sym: (-c[sym], sym))
        if kind == "word":
            ranked = ranked[:vocab_limit]
        vocabs[kind] = ranked + [NULL, UNK]
    vocabs.update({k: list(v) for k, v in FIXED_VOCABS.items()})
    return vocabs


class ReorderNet:
    """Lookup tables, two relu hidden layers and a sigmoid output unit."""

    def __init__(self, spec, vocabs, dim=100, hidden=(200, 100), dropout=0.5,
                 seed=None, word_embeddings=None):
        self.spec = spec
        self.vocabs = {k: list(v) for k, v in vocabs.items()}
        self.index = {k: {sym: i for i, sym in enumerate(v)} for k, v in self.vocabs.items()}
        self.dim = dim
        self.dropout = dropout
        rng = np.random.default_rng(seed)
        r = init_range(dim)
        self.tables = {}
        for kind in KINDS:
            table = rng.uniform(-r, r, size=(len(self.vocabs[kind]), dim))
            if kind == "word" and word_embeddings is not None:
                if word_embeddings.dim != dim:
                    raise ValueError(f"embedding dimension {word_embeddings.dim} != network dimension {dim}")
                for i, w in enumerate(self.vocabs[kind]):
                    # without an UNK row in the file, uncovered words keep their random start
                    if w in word_embeddings or UNK in word_embeddings:
                        table[i] = word_embeddings.lookup(w)
            self.tables[kind] = table
        n_in = len(spec.slots) * dim
        h1, h2 = hidden
        self.W1 = _glorot(rng, h1, n_in)
        self.b1 = np.zeros(h1)
        self.W2 = _glorot(rng, h2, h1)
        self.b2 = np.zeros(h2)
        self.w_out = _glorot(rng, 1, h2)[0]
        self.b_out = 0.0

    # parameters other than the lookup tables
    DENSE = ("W1", "b1", "W2", "b2", "w_out", "b_out")

    @property
    def hidden(self):
        return (self.W1.shape[0], self.W2.shape[0])

    def params(self):
        out = {name: getattr(self, name) for name in self.DENSE}
        out.update({f"table_{k}": t for k, t in self.tables.items()})
        return out

    def parameter_vector(self):
        return np.concatenate([np.ravel(v) for _, v in sorted(self.params().items())])

    def copy(self):
        new = object.__new__(ReorderNet)
        new.__dict__.update(self.__dict__)
        new.tables = {k: t.copy() for k, t in self.tables.items()}
        for name in self.DENSE:
            v = getattr(self, name)
            setattr(new, name, v.copy() if isinstance(v, np.ndarray) else v)
        return new

    def encode(self, instances):
        """Integer matrix (instances x slots); unseen words, tags and labels map to UNK."""
        X = np.empty((len(instances), len(self.spec.slots)), dtype=np.int64)
        for r, inst in enumerate(instances):
            syms = inst.slots()
            if len(syms) != len(self.spec.slots):
                raise ValueError(f"instance has {len(syms)} slots, network expects {len(self.spec.slots)}")
            for c, (sym, kind) in enumerate(zip(syms, self.spec.kinds)):
                idx = self.index[kind].get(sym)
                if idx is None:
                    if kind in FIXED_VOCABS:
                        raise ValueError(f"symbol {sym!r} not valid for {kind} slot")
                    idx = self.index[kind][UNK]
                X[r, c] = idx
        return X

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{MODEL_MAGIC} {MODEL_VERSION}\n")
            f.write(f"relation {self.spec.relation}\n")
            f.write("slots " + " ".join(f"{n}:{k}" for n, k in self.spec.slots) + "\n")
            f.write(f"dims {self.dim} {self.hidden[0]} {self.hidden[1]}\n")
            f.write(f"dropout {self.dropout!r}\n")
            for kind in KINDS:
                table = self.tables[kind]
                f.write(f"table {kind} {table.shape[0]} {table.shape[1]}\n")
                for sym, row in zip(self.vocabs[kind], table):
                    f.write(sym + " " + _fmt(row) + "\n")
            for name in ("W1", "W2"):
                m = getattr(self, name)
                f.write(f"matrix {name} {m.shape[0]} {m.shape[1]}\n")
                for row in m:
                    f.write(_fmt(row) + "\n")
            for name in ("b1", "b2", "w_out"):
                v = getattr(self, name)
                f.write(f"vector {name} {len(v)}\n{_fmt(v)}\n")
            f.write(f"scalar b_out {self.b_out!r}\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            lines = f.read().split("\n")
        it = iter(enumerate(lines, start=1))

        def next_line():
            try:
                return next(it)
            except StopIteration:
                raise ModelFormatError(f"{path}: unexpected end of file") from None

        def expect(keyword):
            lineno, line = next_line()
            parts = line.split(" ")
            if parts[0] != keyword:
                raise ModelFormatError(f"{path}:{lineno}: expected {keyword!r}, got {line[:40]!r}")
            return parts[1:]

        magic = expect(MODEL_MAGIC)
        if magic != [str(MODEL_VERSION)]:
            raise ModelFormatError(f"{path}: unsupported model format version {' '.join(magic)}")
        relation = expect("relation")[0]
        slots = tuple(tuple(item.split(":")) for item in expect("slots"))
        spec = FeatureSpec(relation, slots)
        if SPECS.get(relation) != spec:
            raise ModelFormatError(f"{path}: slot layout does not match relation {relation}")
        dim, h1, h2 = (int(x) for x in expect("dims"))
        dropout = float(expect("dropout")[0])

        net = object.__new__(cls)
        net.spec, net.dim, net.dropout = spec, dim, dropout
        net.vocabs, net.tables = {}, {}
        for kind in KINDS:
            k, n, d = expect("table")
            if k != kind or int(d) != dim:
                raise ModelFormatError(f"{path}: bad table header for {kind}")
            syms, rows = [], []
            for _ in range(int(n)):
                _, line = next_line()
                parts = line.split(" ")
                syms.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
            net.vocabs[kind] = syms
            net.tables[kind] = np.array(rows, dtype=np.float64).reshape(int(n), dim)
        net.index = {k: {sym: i for i, sym in enumerate(v)} for k, v in net.vocabs.items()}
        for name, shape in (("W1", (h1, dim * len(slots))), ("W2", (h2, h1))):
            _, r, c = expect("matrix")
            if (int(r), int(c)) != shape:
                raise ModelFormatError(f"{path}: {name} has shape {r}x{c}, expected {shape}")
            rows = [[float(x) for x in next_line()[1].split(" ")] for _ in range(shape[0])]
            setattr(net, name, np.array(rows, dtype=np.float64))
        for name, size in (("b1", h1), ("b2", h2), ("w_out", h2)):
            _, n = expect("vector")
            if int(n) != size:
                raise ModelFormatError(f"{path}: {name} has length {n}, expected {size}")
            setattr(net, name, np.array([float(x) for x in next_line()[1].split(" ")]))
        net.b_out = float(expect("scalar")[1])
        return net


def _glorot(rng, fan_out, fan_in):
    r = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_out, fan_in))


def _fmt(values):
    return " ".join(repr(float(x)) for x in values)


def dropout_mask(rng, shape, rate):
    """Inverted-dropout mask: kept units are scaled by 1/(1-rate)."""
    if rate == 0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


def _embed(net, X):
    return np.concatenate(
        [net.tables[kind][X[:, s]] for s, kind in enumerate(net.spec.kinds)], axis=1
    )


def _forward(net, X, mask=None):
    e = _embed(net, X)
    x = e if mask is None else e * mask
    z1 = x @ net.W1.T + net.b1
    h1 = relu(z1)
    z2 = h1 @ net.W2.T + net.b2
    h2 = relu(z2)
    z = h2 @ net.w_out + net.b_out
    y_raw = sigmoid(z)
    y_hat = np.clip(y_raw, EPS, 1.0 - EPS)
    return y_hat, (x, z1, h1, z2, h2, y_raw)


def forward(net, X, train_mode=False, rng=None, mask=None):
    """Swap probabilities for encoded rows ``X``.

    In train mode the concatenated input embeddings are dropped out with
    ``net.dropout`` (or multiplied by an explicit ``mask``).
    """
    X = np.atleast_2d(X)
    if train_mode and mask is None and net.dropout > 0:
        if rng is None:
            raise ValueError("train_mode dropout needs an rng")
        mask = dropout_mask(rng, (X.shape[0], X.shape[1] * net.dim), net.dropout)
    if not train_mode:
        mask = None
    return _forward(net, X, mask)[0]


def cross_entropy(y_hat, y):
    y_hat = np.clip(y_hat, EPS, 1.0 - EPS)
    y = np.asarray(y, dtype=np.float64)
    return float(-np.mean(y * np.log(y_hat) + (1.0 - y) * np.log(1.0 - y_hat)))


def loss(net, X, y, mask=None):
    return cross_entropy(_forward(net, np.atleast_2d(X), mask)[0], y)


def backward(net, X, y, mask=None):
    """Loss and gradients; table gradients come back row-sparse as (rows, grads) per kind."""
    X = np.atleast_2d(X)
    y = np.asarray(y, dtype=np.float64)
    y_hat, (x, z1, h1, z2, h2, y_raw) = _forward(net, X, mask)
    T = len(y)
    value = cross_entropy(y_hat, y)
    # clipping makes the loss flat wherever it is active
    active = (y_raw > EPS) & (y_raw < 1.0 - EPS)
    dz = np.where(active, (y_hat - y) / T, 0.0)
    g = {"w_out": h2.T @ dz, "b_out": float(dz.sum())}
    dz2 = np.outer(dz, net.w_out) * (z2 > 0)
    g["W2"] = dz2.T @ h1
    g["b2"] = dz2.sum(axis=0)
    dz1 = (dz2 @ net.W2) * (z1 > 0)
    g["W1"] = dz1.T @ x
    g["b1"] = dz1.sum(axis=0)
    de = dz1 @ net.W1
    if mask is not None:
        de = de * mask
    sparse = {}
    d = net.dim
    for s, kind in enumerate(net.spec.kinds):
        rows, grads = sparse.setdefault(kind, ([], []))
        rows.append(X[:, s])
        grads.append(de[:, s * d:(s + 1) * d])
    sparse = {k: (np.concatenate(r), np.concatenate(gr)) for k, (r, gr) in sparse.items()}
    return value, g, sparse


def grad(net, X, y, mask=None):
    """Dense gradients of the mean cross-entropy for every parameter, keyed like ``net.params()``."""
    value, g, sparse = backward(net, X, y, mask)
    for kind, table in net.tables.items():
        dense = np.zeros_like(table)
        if kind in sparse:
            np.add.at(dense, sparse[kind][0], sparse[kind][1])
        g[f"table_{kind}"] = dense
    return value, g


def accuracy(net, X, y):
    return float(np.mean((forward(net, X) > 0.5) == (np.asarray(y) == 1)))


def _labels(instances):
    y = np.array([inst.label for inst in instances], dtype=np.float64)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("instance labels must be 0 or 1")
    return y


def train(instances, heldout, cfg, embeddings=None, spec=None):
    """Mini-batch SGD; returns the snapshot with the lowest held-out cross-entropy.

    The returned network carries ``history``: (epoch, mean train loss,
    held-out loss) per epoch, and ``best_epoch``.
    """
    if not instances or not heldout:
        raise ValueError("training and held-out instance sets must both be nonempty")
    spec = spec or _spec_for(instances[0])
    vocabs = build_vocabs(spec, instances, cfg.vocab_limit)
    net = ReorderNet(spec, vocabs, cfg.dim, (cfg.hidden1, cfg.hidden2), cfg.dropout,
                     seed=cfg.seed, word_embeddings=embeddings)
    X, y = net.encode(instances), _labels(instances)
    Xh, yh = net.encode(heldout), _labels(heldout)
    rng = np.random.default_rng([cfg.seed, 1])
    T = len(y)
    batch = cfg.batch_size
    if cfg.batches_per_epoch is not None:
        batch = max(1, math.ceil(T / cfg.batches_per_epoch))
    lr = cfg.learning_rate
    width = X.shape[1] * net.dim

    best, best_loss, best_epoch = net.copy(), loss(net, Xh, yh), 0
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(T)
        total = 0.0
        for start in range(0, T, batch):
            idx = order[start:start + batch]
            mask = dropout_mask(rng, (len(idx), width), net.dropout) if net.dropout > 0 else None
            value, g, sparse = backward(net, X[idx], y[idx], mask)
            if not math.isfinite(value):
                raise TrainingError(f"non-finite training loss at epoch {epoch}, batch starting {start}")
            total += value * len(idx)
            net.W1 -= lr * g["W1"]
            net.b1 -= lr * g["b1"]
            net.W2 -= lr * g["W2"]
            net.b2 -= lr * g["b2"]
            net.w_out -= lr * g["w_out"]
            net.b_out -= lr * g["b_out"]
            for kind, (rows, grads) in sparse.items():
                np.add.at(net.tables[kind], rows, -lr * grads)
        held = loss(net, Xh, yh)
        if not math.isfinite(held):
            raise TrainingError(f"non-finite held-out loss at epoch {epoch}")
        history.append((epoch, total / T, held))
        log.debug("epoch %d train %.5f held-out %.5f", epoch, total / T, held)
        if held < best_loss:
            best, best_loss, best_epoch = net.copy(), held, epoch
    best.history = history
    best.best_epoch = best_epoch
    return best


def _spec_for(instance):
    return SIBLING_SPEC if hasattr(instance, "left") else HEAD_CHILD_SPEC


def _train_member(args):
    instances, heldout, cfg, embeddings = args
    return train(instances, heldout, cfg, embeddings)


def train_ensemble(instances, heldout, cfg, n, embeddings=None, workers=1):
    """``n`` networks; member k is trained with seed ``cfg.seed + k``."""
    if n < 1:
        raise ValueError("ensemble size must be >= 1")
    jobs = [(instances, heldout, replace(cfg, seed=cfg.seed + k), embeddings) for k in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_train_member, jobs))
    return [_train_member(job) for job in jobs]


def predict_swap(net, query):
    """Swap probability for one instance, or an array for a list of instances."""
    if isinstance(query, (list, tuple)):
        return forward(net, net.encode(list(query)))
    return float(forward(net, net.encode([query]))[0])
