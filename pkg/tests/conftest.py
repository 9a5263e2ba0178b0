import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bsc.clique import all_maximal_cliques  # noqa: E402
from bsc.corpus import build_corpus, prune_by_frequency  # noqa: E402
from bsc.graph import BilingualGraph, build_graph, count_cooccurrences  # noqa: E402
from bsc.synthetic import make_twin_corpus  # noqa: E402
from oracles import seven_node_edges  # noqa: E402

# threshold that keeps the topical edges of the twin corpus and drops the noise
TWIN_THRESHOLD = 6e-4

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def seven_node():
    return BilingualGraph.from_edges(7, seven_node_edges())


@pytest.fixture(scope="session")
def twin_corpus():
    src, tgt, lexicon = make_twin_corpus(n_sentences=2000, pairs=40, seed=0)
    vocab, sentences = build_corpus(src, tgt)
    graph = build_graph(count_cooccurrences(sentences, vocab), vocab, TWIN_THRESHOLD)
    return {"src": src, "tgt": tgt, "lexicon": lexicon, "vocab": vocab,
            "sentences": sentences, "graph": graph}


@pytest.fixture(scope="session")
def twin_nn(twin_corpus):
    """Pruned vocabulary and whole-graph cliques of the twin corpus, as used for CBOW."""
    pruned = prune_by_frequency(twin_corpus["vocab"], 5)
    graph = twin_corpus["graph"].induced(pruned.remap)
    return {"vocab": pruned, "graph": graph, "cliques": list(all_maximal_cliques(graph, pruned))}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
