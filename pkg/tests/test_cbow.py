import json

import numpy as np
import pytest

from bsc.cbow import (CbowConfig, cliques_to_training_windows, example_gradients, negative_table,
                      prepare_training_set, train)
from bsc.corpus import SRC, TGT, Token, Vocabulary
from bsc.errors import EmptyTrainingSet
from oracles import central_differences

# seeded settings under which the twin corpus is trained in the tests
TWIN_CBOW = CbowConfig(dim=20, epochs=200, initial_lr=0.05, seed=1)


def _vocab(n, freq=5):
    return Vocabulary([Token(f"w{i}", SRC if i % 2 else TGT) for i in range(n)], [freq] * n)


def test_nine_word_clique_discarded():
    cfg = CbowConfig()
    assert list(cliques_to_training_windows([tuple(range(9))], cfg)) == []
    ts = prepare_training_set([tuple(range(9)), tuple(range(8))], cfg)
    assert (ts.kept_cliques, ts.discarded_cliques, len(ts)) == (1, 1, 8)


def test_two_word_clique_windows():
    assert list(cliques_to_training_windows([(3, 5)], CbowConfig())) == [(3, (5,)), (5, (3,))]


def test_seven_node_clique_set_gives_nine_examples():
    cliques = [(0, 1, 2, 3), (1, 4), (4, 5, 6)]
    ts = prepare_training_set(cliques, CbowConfig())
    assert len(ts) == 4 + 2 + 3
    assert ts.contexts.shape == (9, 7)
    assert ts.lengths.tolist() == [3] * 4 + [1] * 2 + [2] * 3
    assert (ts.contexts[4, 1:] == -1).all()


def test_example_count_matches_kept_sizes():
    rng = np.random.default_rng(0)
    cliques = [tuple(rng.choice(30, size=int(rng.integers(2, 12)), replace=False)) for _ in range(50)]
    ts = prepare_training_set(cliques, CbowConfig())
    assert len(ts) == sum(len(c) for c in cliques if len(c) <= 8)
    assert ts.kept_cliques + ts.discarded_cliques == 50


def test_negative_table():
    cum = negative_table(np.array([1, 16]))
    assert np.isclose(cum[0], 1 / (1 + 8))
    assert cum[-1] == 1.0


def test_gradient_check():
    rng = np.random.default_rng(3)
    inp = rng.normal(0, 0.5, size=(20, 8))
    out = rng.normal(0, 0.5, size=(20, 8))
    cases = [(0, [1, 2, 3], [4, 5, 6, 7, 8]),
             (9, [10, 11, 12, 13, 14, 15, 16], [17, 18, 19, 10, 3]),  # a negative that is also context
             (2, [5], [5, 5, 7])]                                    # repeated negatives
    for target, context, negatives in cases:
        _, g_in, g_out = example_gradients(inp, out, target, context, negatives)
        n_in, n_out = central_differences(
            lambda: example_gradients(inp, out, target, context, negatives)[0], [inp, out], eps=1e-4)
        for analytic, numeric in ((g_in, n_in), (g_out, n_out)):
            scale = np.maximum(np.abs(analytic), np.abs(numeric))
            big = scale > 1e-6
            assert (np.abs(analytic - numeric)[~big] < 1e-8).all()
            rel = np.abs(analytic - numeric)[big] / scale[big]
            assert rel.max() < 1e-3


def test_two_word_vocabulary_learns_the_pair():
    vocab = Vocabulary([Token("a", SRC), Token("b", TGT)], [5, 5])
    emb = train([(0, 1)], CbowConfig(dim=8, epochs=500, initial_lr=0.1, negatives=1), vocab)
    z = emb.input_vectors[0] @ emb.output_vectors[1]
    assert 1 / (1 + np.exp(-z)) > 0.9


def test_determinism_single_worker():
    cliques = [(0, 1, 2), (2, 3), (4, 5, 6, 7)]
    cfg = CbowConfig(dim=6, epochs=3, seed=7)
    a = train(cliques, cfg, _vocab(8))
    b = train(cliques, cfg, _vocab(8))
    assert np.array_equal(a.input_vectors, b.input_vectors)
    assert np.array_equal(a.output_vectors, b.output_vectors)
    c = train(cliques, CbowConfig(dim=6, epochs=3, seed=8), _vocab(8))
    assert not np.array_equal(a.input_vectors, c.input_vectors)


def test_initialization_range():
    cfg = CbowConfig(dim=4, epochs=1, initial_lr=1e-12)
    emb = train([(0, 1)], cfg, _vocab(50))
    assert np.abs(emb.input_vectors).max() <= 0.5 / 4
    assert np.abs(emb.output_vectors).max() <= 0.5 / 4


def test_hogwild_workers_stay_finite():
    rng = np.random.default_rng(1)
    cliques = [tuple(rng.choice(40, size=4, replace=False)) for _ in range(200)]
    emb = train(cliques, CbowConfig(dim=10, epochs=3, workers=4), _vocab(40))
    assert np.isfinite(emb.input_vectors).all() and np.isfinite(emb.output_vectors).all()
    assert emb.report["examples_seen"] == 3 * 800


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        train([tuple(range(10))], CbowConfig(), _vocab(10))


def test_config_validation():
    with pytest.raises(ValueError):
        CbowConfig(dim=0)
    with pytest.raises(ValueError):
        CbowConfig(negatives=0)


def test_report_and_files(tmp_path):
    emb = train([(0, 1, 2)], CbowConfig(dim=3, epochs=2), _vocab(3))
    emb.save(tmp_path / "e.txt")
    emb.save_report(tmp_path / "r.json")
    assert (tmp_path / "e.txt").read_text().splitlines()[0] == "3 3"
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["examples_per_epoch"] == 3 and len(report["epoch_loss"]) == 2
    assert report["discarded_cliques"] == 0


def loss_inversions(losses):
    """(count, largest relative increase) between consecutive epoch losses."""
    ups = [(b - a) / a for a, b in zip(losses, losses[1:]) if b > a]
    return len(ups), max(ups, default=0.0)


def test_epoch_loss_on_twin_corpus(twin_nn):
    emb = train(twin_nn["cliques"], TWIN_CBOW, twin_nn["vocab"])
    count, worst = loss_inversions(emb.report["epoch_loss"][:3])
    assert count <= 1 and worst <= 0.01
    # past the initial plateau the loss falls well below its starting value
    assert emb.report["epoch_loss"][-1] < 0.8 * emb.report["epoch_loss"][0]
    assert np.isfinite(emb.input_vectors).all()
