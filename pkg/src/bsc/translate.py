"""Lexicon translation by Euclidean nearest neighbors, P@k, dimension tuning."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .cbow import CbowConfig, GlobalEmbedding, TrainingSet, train
from .clique import FOCUS_BUDGET, SenseClique, extract_subgraph, maximal_cliques
from .corpus import SRC, TGT, Token, TokenizerConfig, Vocabulary, read_lines
from .errors import AllPairsOov, NoCliques, NoTargetCandidates, QueryNotInSpace
from .graph import BilingualGraph
from .reduce import reduce_cliques

SRC_TO_TGT = "src->tgt"
TGT_TO_SRC = "tgt->src"
DIRECTIONS = (SRC_TO_TGT, TGT_TO_SRC)


@dataclass(frozen=True)
class LexiconPair:
    source: Token
    gold: Token

    def __post_init__(self):
        if self.source.lang != SRC or self.gold.lang != TGT:
            raise ValueError("lexicon pairs go from a SRC token to a TGT token")


def read_lexicon(path, config: TokenizerConfig | None = None) -> list[LexiconPair]:
    """``source<TAB>gold`` per line; blank lines and ``#`` comments are skipped.

    Words get the same normalization as the corpus, so a hit is an exact
    match of normalized surfaces.
    """
    config = config or TokenizerConfig()
    pairs = []
    for lineno, line in enumerate(read_lines(path), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise ValueError(f"{path}:{lineno}: expected source<TAB>gold")
        pairs.append(LexiconPair(Token(normalize_word(cols[0], config), SRC),
                                 Token(normalize_word(cols[1], config), TGT)))
    return pairs


def normalize_word(word: str, config: TokenizerConfig) -> str:
    toks = config.tokenize(word)
    return " ".join(toks) if toks else word.strip().lower()


def knn_translate(space, query, k: int, target_lang: str) -> list[tuple[Token, float]]:
    """The ``k`` nearest ``target_lang`` words to ``query`` in ``space``.

    ``space`` is a local or global embedding; ``query`` a Token or node-id.
    Ties in distance are broken by ascending node-id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    vocab = space.vocab
    qid = vocab.get(query) if isinstance(query, Token) else int(query)
    row = space.row_of(qid) if qid is not None else None
    if row is None:
        raise QueryNotInSpace(f"{query} is not in the embedding space")
    words = np.asarray(space.words)
    lang_ok = vocab.lang_mask(target_lang)[words]
    cand = np.flatnonzero(lang_ok & (words != qid))
    if len(cand) == 0:
        raise NoTargetCandidates(f"no {target_lang} words in the space of {query}")
    vecs = space.word_vectors
    dist = np.linalg.norm(vecs[cand] - vecs[row], axis=1)
    order = np.lexsort((words[cand], dist))[:k]
    return [(vocab.token(int(words[cand[i]])), float(dist[i])) for i in order]


class LocalEmbedder:
    """PCA/CA: one local space per query, rebuilt from the query's cliques.

    Cliques are cached per focus word, so sweeping the dimension only redoes
    the (cheap) reduction.
    """

    def __init__(self, graph: BilingualGraph, vocab: Vocabulary, method: str, dim: int,
                 max_cliques: int = FOCUS_BUDGET, cache: dict | None = None):
        if graph.node_count != vocab.size:
            raise ValueError("graph and vocabulary disagree on the number of nodes")
        self.graph = graph
        self.vocab = vocab
        self.method = method
        self.dim = dim
        self.max_cliques = max_cliques
        self._cache = {} if cache is None else cache

    @property
    def name(self) -> str:
        return f"BSC+{self.method.upper()}"

    def cliques_of(self, node_id: int) -> list[SenseClique]:
        if node_id not in self._cache:
            self._cache[node_id] = maximal_cliques(extract_subgraph(self.graph, node_id),
                                                   self.max_cliques)
        return self._cache[node_id]

    def space_for(self, node_id: int):
        cliques = self.cliques_of(node_id)
        if not cliques:
            raise NoCliques(f"node {node_id} has no sense cliques")
        return reduce_cliques(cliques, self.vocab, self.method, self.dim, focus=node_id)

    def with_dim(self, dim: int) -> "LocalEmbedder":
        return LocalEmbedder(self.graph, self.vocab, self.method, dim, self.max_cliques, self._cache)


class GlobalEmbedder:
    """One shared space (CBOW). Retrains on ``with_dim`` if it knows how."""

    def __init__(self, space: GlobalEmbedding, training: TrainingSet | None = None,
                 cfg: CbowConfig | None = None):
        self.space = space
        self.vocab = space.vocab
        self.training = training
        self.cfg = cfg

    @classmethod
    def trained(cls, training: TrainingSet, vocab: Vocabulary, cfg: CbowConfig) -> "GlobalEmbedder":
        return cls(train(training, cfg, vocab), training, cfg)

    name = "BSC+NN"
    method = "nn"

    @property
    def dim(self) -> int:
        return self.space.dim

    def space_for(self, node_id: int):
        return self.space

    def with_dim(self, dim: int) -> "GlobalEmbedder":
        if dim == self.dim:
            return self
        if self.training is None or self.cfg is None:
            raise ValueError("this embedding was loaded from disk and cannot be retrained")
        return GlobalEmbedder.trained(self.training, self.vocab, replace(self.cfg, dim=dim))


@dataclass
class EvalReport:
    method: str
    dim: int
    direction: str
    k_values: list[int]
    precision: dict[int, float]
    evaluated_pairs: int
    discarded_oov: int
    hits: dict[int, int] = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "method": self.method,
            "dim": self.dim,
            "direction": self.direction,
            "k_values": list(self.k_values),
            "precision": {str(k): v for k, v in self.precision.items()},
            "hits": {str(k): v for k, v in self.hits.items()},
            "evaluated_pairs": self.evaluated_pairs,
            "discarded_oov": self.discarded_oov,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


REPORT_SCHEMA = {
    "type": "object",
    "required": ["method", "dim", "direction", "k_values", "precision", "hits",
                 "evaluated_pairs", "discarded_oov"],
    "properties": {
        "method": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "direction": {"enum": list(DIRECTIONS)},
        "k_values": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "precision": {"type": "object",
                      "additionalProperties": {"type": "number", "minimum": 0, "maximum": 1}},
        "hits": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "evaluated_pairs": {"type": "integer", "minimum": 0},
        "discarded_oov": {"type": "integer", "minimum": 0},
        "wall_time": {"type": "number", "minimum": 0},
    },
}


def gold_rank(space, query_id: int, gold_id: int, k: int, target_lang: str) -> int | None:
    """0-based rank of the gold word among the top ``k``, or None for a miss."""
    try:
        ranked = knn_translate(space, query_id, k, target_lang)
    except (QueryNotInSpace, NoTargetCandidates):
        return None
    gold = space.vocab.token(gold_id)
    for r, (tok, _) in enumerate(ranked):
        if tok == gold:
            return r
    return None


def evaluate(pairs: Sequence[LexiconPair], embedder, k_values: Iterable[int] = (1, 5),
             direction: str = SRC_TO_TGT) -> EvalReport:
    if not pairs:
        raise ValueError("no lexicon pairs to evaluate")
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    k_values = sorted(set(int(k) for k in k_values))
    kmax = k_values[-1]
    vocab = embedder.vocab
    start = time.perf_counter()

    hits = {k: 0 for k in k_values}
    evaluated = discarded = 0
    for pair in pairs:
        query, gold = (pair.source, pair.gold) if direction == SRC_TO_TGT else (pair.gold, pair.source)
        qid, gid = vocab.get(query), vocab.get(gold)
        if qid is None or gid is None:
            discarded += 1
            continue
        evaluated += 1
        try:
            space = embedder.space_for(qid)
        except NoCliques:
            continue
        rank = gold_rank(space, qid, gid, kmax, gold.lang)
        if rank is None:
            continue
        for k in k_values:
            if rank < k:
                hits[k] += 1

    if evaluated == 0:
        raise AllPairsOov(f"all {len(pairs)} lexicon pairs are out of vocabulary")
    return EvalReport(
        method=embedder.name, dim=embedder.dim, direction=direction, k_values=k_values,
        precision={k: hits[k] / evaluated for k in k_values},
        evaluated_pairs=evaluated, discarded_oov=discarded, hits=hits,
        wall_time=time.perf_counter() - start,
    )


def evaluate_both(pairs, embedder, k_values=(1, 5)) -> list[EvalReport]:
    return [evaluate(pairs, embedder, k_values, d) for d in DIRECTIONS]


def tune_dimension(dev_pairs: Sequence[LexiconPair], embedder, grid: Sequence[int],
                   k_values=(1, 5)):
    """Pick the dimension with the best mean of P@k over both directions.

    Returns ``(best_dim, curve)`` where ``curve`` maps each grid value to its
    mean score; ties go to the smaller dimension.
    """
    if not grid:
        raise ValueError("empty dimension grid")
    curve = {}
    for d in sorted(set(int(x) for x in grid)):
        reports = evaluate_both(dev_pairs, embedder.with_dim(d), k_values)
        scores = [r.precision[k] for r in reports for k in r.k_values]
        curve[d] = float(np.mean(scores))
    best = max(curve, key=lambda d: (curve[d], -d))
    return best, curve


def format_table(reports: Sequence[EvalReport], labels=("src", "tgt"), hours: bool = False) -> str:
    """Aligned text table: one row per method, P@k columns per direction."""
    methods = list(dict.fromkeys(r.method for r in reports))
    ks = sorted({k for r in reports for k in r.k_values})
    names = {SRC_TO_TGT: f"{labels[0]}-{labels[1]}", TGT_TO_SRC: f"{labels[1]}-{labels[0]}"}
    header = ["method"] + [f"{names[d]} P@{k}" for k in ks for d in DIRECTIONS]
    if hours:
        header.append("time/h")
    rows = []
    for m in methods:
        by_dir = {r.direction: r for r in reports if r.method == m}
        row = [m]
        for k in ks:
            for d in DIRECTIONS:
                r = by_dir.get(d)
                row.append(f"{100 * r.precision[k]:.1f}" if r and k in r.precision else "-")
        if hours:
            row.append(f"{sum(r.wall_time for r in by_dir.values()) / 3600:.2f}")
        rows.append(row)
    widths = [max(len(x[c]) for x in [header] + rows) for c in range(len(header))]
    lines = []
    for x in [header] + rows:
        lines.append("  ".join(s.ljust(w) if c == 0 else s.rjust(w)
                               for c, (s, w) in enumerate(zip(x, widths))))
    return "\n".join(lines) + "\n"


def reports_to_json(reports: Sequence[EvalReport], include_timing: bool = False) -> str:
    return json.dumps([r.to_dict(include_timing) for r in reports], indent=2, sort_keys=True) + "\n"
