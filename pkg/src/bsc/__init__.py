"""Bilingual sense clique (BSC) word embeddings.

Pipeline: parallel corpus -> weighted co-occurrence graph -> maximal cliques
-> PCA / correspondence analysis / CBOW word vectors -> nearest-neighbor
lexicon translation.
"""

from .corpus import SRC, TGT, Token, TokenizerConfig, Vocabulary, build_corpus, ingest, prune_by_frequency
from .graph import BilingualGraph, build_graph, count_cooccurrences, graph_stats
from .clique import all_maximal_cliques, extract_subgraph, maximal_cliques
from .reduce import build_incidence, ca_reduce, embed_word_locally, pca_reduce
from .cbow import CbowConfig, train
from .translate import LexiconPair, evaluate, knn_translate, tune_dimension

__all__ = [
    "SRC", "TGT", "Token", "TokenizerConfig", "Vocabulary", "build_corpus", "ingest",
    "prune_by_frequency", "BilingualGraph", "build_graph", "count_cooccurrences", "graph_stats",
    "all_maximal_cliques", "extract_subgraph", "maximal_cliques", "build_incidence", "ca_reduce",
    "embed_word_locally", "pca_reduce", "CbowConfig", "train", "LexiconPair", "evaluate",
    "knn_translate", "tune_dimension",
]

__version__ = "0.1.0"
