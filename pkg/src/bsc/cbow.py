"""CBOW with negative sampling over whole-graph sense cliques.

Each clique is an unordered bag of words. Cliques larger than the window
are dropped; every remaining clique yields one example per member, with
that member as the target and the other members as context. The hidden
layer averages only the context words that are present, which is how the
missing slots of a short clique are given zero weight.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .clique import SenseClique
from .corpus import Vocabulary
from .errors import EmptyTrainingSet
from .reduce import write_embedding_file

MIN_LR_FRACTION = 1e-4


@dataclass
class CbowConfig:
    dim: int = 100
    window: int = 8
    min_freq: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.window < 2:
            raise ValueError("window must hold at least two words")
        if self.epochs < 1 or self.initial_lr <= 0:
            raise ValueError("epochs and initial_lr must be positive")


def cliques_to_training_windows(cliques: Iterable[SenseClique], cfg: CbowConfig) -> Iterator[tuple[int, tuple[int, ...]]]:
    """Yield ``(target, context)`` pairs; cliques larger than the window are skipped."""
    for c in cliques:
        if len(c) > cfg.window:
            continue
        for k, w in enumerate(c):
            yield w, tuple(c[:k]) + tuple(c[k + 1:])


@dataclass
class TrainingSet:
    targets: np.ndarray      # (n,)
    contexts: np.ndarray     # (n, window - 1), padded with -1
    lengths: np.ndarray      # (n,) number of real context words
    kept_cliques: int
    discarded_cliques: int

    def __len__(self):
        return len(self.targets)


def prepare_training_set(cliques: Iterable[SenseClique], cfg: CbowConfig) -> TrainingSet:
    targets, contexts, lengths = [], [], []
    kept = discarded = 0
    width = cfg.window - 1
    for c in cliques:
        if len(c) > cfg.window:
            discarded += 1
            continue
        kept += 1
        for w, ctx in cliques_to_training_windows([c], cfg):
            targets.append(w)
            lengths.append(len(ctx))
            contexts.append(list(ctx) + [-1] * (width - len(ctx)))
    return TrainingSet(
        np.array(targets, dtype=np.int64),
        np.array(contexts, dtype=np.int64).reshape(-1, width),
        np.array(lengths, dtype=np.int64),
        kept, discarded,
    )


def negative_table(freqs: np.ndarray, power: float = 0.75) -> np.ndarray:
    """Cumulative sampling distribution proportional to ``freq ** power``."""
    p = np.asarray(freqs, dtype=np.float64) ** power
    cum = np.cumsum(p)
    return cum / cum[-1]


def _log_sigmoid_neg(z):
    """-log(sigmoid(z)), stable for large |z|."""
    return np.logaddexp(0.0, -z)


def forward_backward(inp: np.ndarray, out: np.ndarray, target: int, context: Sequence[int],
                     negatives: Sequence[int]):
    """Loss of one example and the pieces of its gradient.

    Returns ``(loss, rows, grad_rows, grad_hidden)``: ``rows`` are the output
    rows touched (target first, then negatives), ``grad_rows`` their
    gradients, and ``grad_hidden`` the gradient w.r.t. the averaged context
    vector (each context row receives ``grad_hidden / len(context)``).
    """
    ctx = np.asarray(context, dtype=np.int64)
    h = inp[ctx].mean(axis=0)
    rows = np.concatenate([[target], np.asarray(negatives, dtype=np.int64)])
    labels = np.zeros(len(rows))
    labels[0] = 1.0
    scores = out[rows] @ h
    loss = float(_log_sigmoid_neg(scores[0]) + np.sum(_log_sigmoid_neg(-scores[1:])))
    g = 1.0 / (1.0 + np.exp(-scores)) - labels
    grad_rows = g[:, None] * h[None, :]
    grad_hidden = g @ out[rows]
    return loss, rows, grad_rows, grad_hidden


def example_gradients(inp, out, target, context, negatives):
    """Full-size gradients of one example's loss, for checking."""
    loss, rows, grad_rows, grad_hidden = forward_backward(inp, out, target, context, negatives)
    g_in = np.zeros_like(inp)
    g_out = np.zeros_like(out)
    np.add.at(g_out, rows, grad_rows)
    np.add.at(g_in, np.asarray(context, dtype=np.int64), grad_hidden / len(context))
    return loss, g_in, g_out


@dataclass
class GlobalEmbedding:
    vocab: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray | None
    report: dict = field(default_factory=dict)
    _row: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    @property
    def words(self) -> np.ndarray:
        return np.arange(self.vocab.size)

    @property
    def word_vectors(self) -> np.ndarray:
        return self.input_vectors

    def row_of(self, node_id: int) -> int | None:
        node_id = int(node_id)
        return node_id if 0 <= node_id < self.vocab.size else None

    def save(self, path) -> None:
        write_embedding_file(path, self.vocab.tokens, self.input_vectors)

    def save_report(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.report, f, indent=2, sort_keys=True)
            f.write("\n")


def _run_examples(order, data: TrainingSet, negs, inp, out, lr_at, step0, losses):
    for pos, e in enumerate(order):
        t = data.targets[e]
        n = data.lengths[e]
        ctx = data.contexts[e, :n]
        neg = negs[e]
        neg = neg[neg != t]
        loss, rows, grad_rows, grad_hidden = forward_backward(inp, out, t, ctx, neg)
        lr = lr_at(step0 + pos)
        np.subtract.at(out, rows, lr * grad_rows)
        inp[ctx] -= lr * grad_hidden / n
        losses[e] = loss


def train(windows: TrainingSet | Iterable[SenseClique], cfg: CbowConfig, vocab: Vocabulary) -> GlobalEmbedding:
    """SGD over the training examples; returns input and output vectors.

    ``windows`` is a prepared :class:`TrainingSet` or an iterable of cliques.
    With ``cfg.workers == 1`` the result is bit-for-bit reproducible for a
    given seed; more workers update the shared vectors without locking.
    """
    data = windows if isinstance(windows, TrainingSet) else prepare_training_set(windows, cfg)
    if len(data) == 0:
        raise EmptyTrainingSet("no cliques fit in the training window")
    if data.targets.max() >= vocab.size:
        raise ValueError("training examples reference words outside the vocabulary")

    rng = np.random.default_rng(cfg.seed)
    v, dim = vocab.size, cfg.dim
    inp = rng.uniform(-0.5 / dim, 0.5 / dim, size=(v, dim))
    out = rng.uniform(-0.5 / dim, 0.5 / dim, size=(v, dim))
    table = negative_table(vocab.freqs)

    n = len(data)
    total_steps = cfg.epochs * n

    def lr_at(step):
        return cfg.initial_lr * (1.0 - (1.0 - MIN_LR_FRACTION) * step / total_steps)

    epoch_loss = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        negs = np.searchsorted(table, rng.random((n, cfg.negatives)), side="right")
        negs = np.minimum(negs, v - 1)
        losses = np.zeros(n)
        step0 = epoch * n
        if cfg.workers <= 1:
            _run_examples(order, data, negs, inp, out, lr_at, step0, losses)
        else:
            parts = np.array_split(order, cfg.workers)
            threads = []
            offset = step0
            for part in parts:
                th = threading.Thread(target=_run_examples,
                                      args=(part, data, negs, inp, out, lr_at, offset, losses))
                offset += len(part)
                threads.append(th)
                th.start()
            for th in threads:
                th.join()
        if not (np.all(np.isfinite(inp)) and np.all(np.isfinite(out))):
            raise FloatingPointError(f"non-finite vectors after epoch {epoch + 1}")
        epoch_loss.append(float(losses.mean()))

    report = {
        "config": asdict(cfg),
        "examples_per_epoch": n,
        "examples_seen": total_steps,
        "kept_cliques": data.kept_cliques,
        "discarded_cliques": data.discarded_cliques,
        "epoch_loss": epoch_loss,
    }
    return GlobalEmbedding(vocab, inp, out, report)
