from pathlib import Path

import numpy as np
import pytest

from depreorder.corpus_io import AlignedPair, DepSentence, Token, parse_alignment, read_conll

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def sample_sentence():
    return read_conll(DATA / "sample.conll")[0]


@pytest.fixture
def sample_pair(sample_sentence):
    target = (DATA / "sample.en").read_text().split()
    links = parse_alignment((DATA / "sample.align").read_text().strip(), len(sample_sentence), len(target))
    return AlignedPair(sample_sentence, target, links)


def random_tree(rng, n, pos_tags=("NN", "VV", "PU", "JJ"), vocab=None, labels=("a", "b", "c")):
    """Uniformly shuffled attachment: every token hangs off an earlier-drawn token."""
    order = rng.permutation(np.arange(1, n + 1))
    heads = {int(order[0]): 0}
    for k in range(1, n):
        heads[int(order[k])] = int(order[rng.integers(k)])
    tokens = []
    for i in range(1, n + 1):
        word = f"w{i}" if vocab is None else vocab[rng.integers(len(vocab))]
        label = "root" if heads[i] == 0 else labels[rng.integers(len(labels))]
        tokens.append(Token(i, word, pos_tags[rng.integers(len(pos_tags))], heads[i], label))
    return DepSentence(tokens)


# ----------------------------------------------------------------------
# acceptance report: one line per criterion at the end of the session

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "ran": False})
    if call.when == "call" or call.excinfo is not None:
        entry["ran"] = True
        if call.excinfo is not None:
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")
