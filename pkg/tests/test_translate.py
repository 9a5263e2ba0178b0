import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsc.cbow import GlobalEmbedding, prepare_training_set
from bsc.corpus import SRC, TGT, Token, Vocabulary
from bsc.errors import AllPairsOov, NoTargetCandidates, QueryNotInSpace
from bsc.translate import (REPORT_SCHEMA, SRC_TO_TGT, TGT_TO_SRC, GlobalEmbedder, LexiconPair,
                           LocalEmbedder, evaluate, evaluate_both, format_table, knn_translate,
                           read_lexicon, reports_to_json, tune_dimension)
from test_cbow import TWIN_CBOW


def space(tokens, vectors):
    vocab = Vocabulary([Token(*t) for t in tokens], [1] * len(tokens))
    return GlobalEmbedding(vocab, np.asarray(vectors, dtype=float), None)


def line_space():
    # query at the origin, target words at distances 3, 1, 2 and a source word at 0.5
    return space([("q", SRC), ("c", TGT), ("a", TGT), ("b", TGT), ("s", SRC)],
                 [[0, 0], [3, 0], [0, 1], [0, -2], [0.5, 0]])


def test_knn_order():
    got = knn_translate(line_space(), Token("q", SRC), 2, TGT)
    assert [(t.surface, d) for t, d in got] == [("a", 1.0), ("b", 2.0)]


def test_knn_k_larger_than_candidates():
    assert len(knn_translate(line_space(), 0, 10, TGT)) == 3


def test_knn_excludes_query_and_other_language():
    got = knn_translate(line_space(), Token("s", SRC), 5, SRC)
    assert [t.surface for t, _ in got] == ["q"]


def test_knn_ties_by_node_id():
    sp = space([("q", SRC), ("z", TGT), ("y", TGT), ("x", TGT)], [[0, 0], [1, 0], [0, 1], [-1, 0]])
    assert [t.surface for t, _ in knn_translate(sp, 0, 3, TGT)] == ["z", "y", "x"]


def test_knn_errors():
    sp = line_space()
    with pytest.raises(QueryNotInSpace):
        knn_translate(sp, Token("nope", SRC), 1, TGT)
    with pytest.raises(NoTargetCandidates):
        knn_translate(space([("q", SRC), ("r", SRC)], [[0], [1]]), 0, 1, TGT)
    with pytest.raises(ValueError):
        knn_translate(sp, 0, 0, TGT)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_knn_isometry_invariance(seed):
    rng = np.random.default_rng(seed)
    n, d = 12, 4
    toks = [(f"w{i}", SRC if i < 4 else TGT) for i in range(n)]
    vecs = rng.normal(size=(n, d))
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    shift = rng.normal(size=d)
    a = knn_translate(space(toks, vecs), 0, 5, TGT)
    b = knn_translate(space(toks, vecs @ q.T + shift), 0, 5, TGT)
    assert [t for t, _ in a] == [t for t, _ in b]
    assert np.allclose([x for _, x in a], [x for _, x in b], atol=1e-10)


def test_precision_gold_at_rank_one():
    sp = space([("q", SRC), ("g", TGT), ("o", TGT)], [[0, 0], [0, 1], [0, 2]])
    r = evaluate([LexiconPair(Token("q", SRC), Token("g", TGT))], GlobalEmbedder(sp), (1, 5))
    assert r.precision == {1: 1.0, 5: 1.0}


def test_precision_gold_at_rank_three():
    # five target words at distances 1..5, gold third
    sp = space([("q", SRC)] + [(f"t{i}", TGT) for i in range(5)], [[0.0]] + [[i + 1.0] for i in range(5)])
    pairs = [LexiconPair(Token("q", SRC), Token("t2", TGT))]
    r = evaluate(pairs, GlobalEmbedder(sp), (1, 5))
    assert r.precision == {1: 0.0, 5: 1.0}
    assert r.hits == {1: 0, 5: 1}


def test_oov_pairs_discarded():
    sp = space([("q", SRC), ("g", TGT)], [[0], [1]])
    pairs = [LexiconPair(Token("q", SRC), Token("g", TGT)),
             LexiconPair(Token("q", SRC), Token("missing", TGT)),
             LexiconPair(Token("gone", SRC), Token("g", TGT))]
    r = evaluate(pairs, GlobalEmbedder(sp))
    assert (r.evaluated_pairs, r.discarded_oov) == (1, 2)
    assert r.evaluated_pairs + r.discarded_oov == len(pairs)
    with pytest.raises(AllPairsOov):
        evaluate(pairs[1:], GlobalEmbedder(sp))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_precision_monotone_in_k(seed):
    rng = np.random.default_rng(seed)
    n_src, n_tgt = 6, 8
    toks = [(f"s{i}", SRC) for i in range(n_src)] + [(f"t{i}", TGT) for i in range(n_tgt)]
    sp = space(toks, rng.normal(size=(n_src + n_tgt, 3)))
    pairs = [LexiconPair(Token(f"s{i}", SRC), Token(f"t{int(rng.integers(n_tgt))}", TGT))
             for i in range(n_src)] + [LexiconPair(Token("oov", SRC), Token("t0", TGT))]
    for r in evaluate_both(pairs, GlobalEmbedder(sp), (1, 2, 5, 10)):
        p = [r.precision[k] for k in r.k_values]
        assert p == sorted(p)
        assert r.evaluated_pairs + r.discarded_oov == len(pairs)
        assert all(0 <= x <= 1 for x in p)


class FixedEmbedder:
    """Embedder whose precision per dimension is preset through the gold placement."""

    def __init__(self, good_dims, dim=1):
        self.good_dims = set(good_dims)
        self.dim = dim
        self.name = "fixed"
        hit = dim in self.good_dims
        self.vocab = Vocabulary([Token("q", SRC), Token("g", TGT), Token("o", TGT)], [1, 1, 1])
        vecs = [[0.0], [1.0], [2.0]] if hit else [[0.0], [2.0], [1.0]]
        self.space = GlobalEmbedding(self.vocab, np.array(vecs), None)

    def space_for(self, node_id):
        return self.space

    def with_dim(self, dim):
        return FixedEmbedder(self.good_dims, dim)


def test_tune_argmax_and_ties():
    pairs = [LexiconPair(Token("q", SRC), Token("g", TGT))]
    best, curve = tune_dimension(pairs, FixedEmbedder({10}), [2, 10, 50])
    assert best == 10
    # a bad dimension misses only src->tgt P@1 (the reverse query has one candidate)
    assert curve == {2: 0.75, 10: 1.0, 50: 0.75}
    best, _ = tune_dimension(pairs, FixedEmbedder({10, 50}), [50, 10, 100])
    assert best == 10
    with pytest.raises(ValueError):
        tune_dimension(pairs, FixedEmbedder(set()), [])


def test_read_lexicon(tmp_path):
    (tmp_path / "lex.tsv").write_text("# comment\nHouse\tMaison\n\ncat\tchat,\n", encoding="utf-8")
    pairs = read_lexicon(tmp_path / "lex.tsv")
    assert pairs == [LexiconPair(Token("house", SRC), Token("maison", TGT)),
                     LexiconPair(Token("cat", SRC), Token("chat", TGT))]
    (tmp_path / "bad.tsv").write_text("onlyone\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_lexicon(tmp_path / "bad.tsv")


def test_lexicon_pair_languages():
    with pytest.raises(ValueError):
        LexiconPair(Token("a", TGT), Token("b", TGT))


def test_report_schema_and_table():
    sp = space([("q", SRC), ("g", TGT)], [[0], [1]])
    reports = evaluate_both([LexiconPair(Token("q", SRC), Token("g", TGT))], GlobalEmbedder(sp))
    for r in reports:
        jsonschema.validate(r.to_dict(), REPORT_SCHEMA)
        assert "wall_time" not in r.to_dict(include_timing=False)
    assert [r["direction"] for r in json.loads(reports_to_json(reports))] == [SRC_TO_TGT, TGT_TO_SRC]
    table = format_table(reports, labels=("en", "fr")).splitlines()
    assert table[0].split() == ["method", "en-fr", "P@1", "fr-en", "P@1", "en-fr", "P@5", "fr-en", "P@5"]
    assert table[1].split() == ["BSC+NN", "100.0", "100.0", "100.0", "100.0"]


def test_local_translation_on_twin_corpus(twin_corpus):
    lexicon = twin_corpus["lexicon"]
    for method in ("ca", "pca"):
        emb = LocalEmbedder(twin_corpus["graph"], twin_corpus["vocab"], method, 2)
        for r in evaluate_both(lexicon, emb, (1, 5)):
            assert r.precision[1] == 1.0 and r.evaluated_pairs == len(lexicon)
        p = lexicon[0]
        top = knn_translate(emb.space_for(twin_corpus["vocab"].id_of(p.source)), p.source, 1, TGT)
        assert top[0][0] == p.gold


def test_global_translation_on_twin_corpus(twin_nn, twin_corpus):
    training = prepare_training_set(twin_nn["cliques"], TWIN_CBOW)
    emb = GlobalEmbedder.trained(training, twin_nn["vocab"], TWIN_CBOW)
    for r in evaluate_both(twin_corpus["lexicon"], emb, (1, 5)):
        assert r.precision[1] >= 0.9
    assert emb.with_dim(TWIN_CBOW.dim) is emb
    assert emb.with_dim(4).dim == 4
    assert not isinstance(emb.space_for(0), LocalEmbedder)


def test_direction_swaps_query_and_gold():
    sp = space([("q", SRC), ("g", TGT), ("h", TGT)], [[0], [5], [1]])
    pair = [LexiconPair(Token("q", SRC), Token("g", TGT))]
    assert evaluate(pair, GlobalEmbedder(sp), (1,), SRC_TO_TGT).precision[1] == 0.0
    # from g the only source word is q
    assert evaluate(pair, GlobalEmbedder(sp), (1,), TGT_TO_SRC).precision[1] == 1.0
