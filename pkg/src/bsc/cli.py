"""Command-line front-end.

Each stage persists its output in the working directory so later stages
(and dimension sweeps) reuse it::

    bsc build     --src train.en --tgt train.fr --threshold 3e-4
    bsc cliques   --min-freq 5
    bsc embed     --method nn --dim 100
    bsc translate --method ca --dim 50 --k 5 language
    bsc eval      --method ca --dim 50 --lexicon test.tsv --k 1,5
    bsc visualize --method ca language
    bsc tune      --method pca --lexicon dev.tsv --grid 2,10,50

Settings come from ``--config FILE`` (``key=value`` lines) and flags; flags
win. The output directory falls back to ``$BSC_OUT_DIR`` and then ``.``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .cbow import CbowConfig, GlobalEmbedding, prepare_training_set
from .clique import all_maximal_cliques, read_cliques, write_cliques
from .corpus import SRC, TGT, Token, TokenizerConfig, other_lang
from .errors import BscError, InputFormatError, NoCliques, UnknownQuery
from .graph import DEFAULT_THRESHOLD, BilingualGraph, build_graph, count_cooccurrences, graph_stats
from .reduce import read_embedding_file
from .translate import (GlobalEmbedder, LocalEmbedder, evaluate_both, format_table, knn_translate,
                        normalize_word, read_lexicon, reports_to_json, tune_dimension)

log = logging.getLogger("bsc")

METHODS = ("pca", "ca", "nn")

VOCAB = "vocab.tsv"
SENTENCES = "sentences.bin"
GRAPH = "graph.bin"
GRAPH_STATS = "graph_stats.json"
VOCAB_NN = "vocab_nn.tsv"
GRAPH_NN = "graph_nn.bin"
CLIQUES = "cliques.bin"
EMBEDDINGS = "embeddings.txt"
CBOW_REPORT = "cbow_report.json"

DEFAULTS = {
    "threshold": DEFAULT_THRESHOLD,
    "method": "ca",
    "dim": 100,
    "grid": "2,10,50,100",
    "k": "1,5",
    "seed": 1,
    "workers": os.cpu_count() or 1,
    "min_freq": 5,
    "epochs": 5,
    "negatives": 5,
    "lr": 0.025,
    "lang": SRC,
}

_TYPES = {"threshold": float, "dim": int, "seed": int, "workers": int, "min_freq": int,
          "epochs": int, "negatives": int, "lr": float}


@dataclass
class PipelineConfig:
    out_dir: Path
    src: str | None
    tgt: str | None
    threshold: float
    method: str
    dim: int
    grid: list[int]
    k: list[int]
    lexicon: str | None
    seed: int
    workers: int
    min_freq: int
    epochs: int
    negatives: int
    lr: float
    lang: str

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def cbow(self) -> CbowConfig:
        return CbowConfig(dim=self.dim, min_freq=self.min_freq, negatives=self.negatives,
                          epochs=self.epochs, initial_lr=self.lr, seed=self.seed,
                          workers=self.workers)


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(corpus_mod.read_lines(path), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputFormatError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(" ", "").split(",") if x]


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    values = dict(DEFAULTS)
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key, val in vars(args).items():
        if val is not None and key not in ("command", "config", "word", "func", "output", "nearest"):
            values[key] = val
    for key, typ in _TYPES.items():
        values[key] = typ(values[key])
    out_dir = values.get("out_dir") or os.environ.get("BSC_OUT_DIR") or "."
    if values["method"] not in METHODS:
        raise InputFormatError(f"method must be one of {', '.join(METHODS)}")
    if values["lang"] not in (SRC, TGT):
        raise InputFormatError("lang must be src or tgt")
    return PipelineConfig(
        out_dir=Path(out_dir), src=values.get("src"), tgt=values.get("tgt"),
        threshold=values["threshold"], method=values["method"], dim=values["dim"],
        grid=_int_list(values["grid"]), k=_int_list(values["k"]), lexicon=values.get("lexicon"),
        seed=values["seed"], workers=max(1, values["workers"]), min_freq=values["min_freq"],
        epochs=values["epochs"], negatives=values["negatives"], lr=values["lr"], lang=values["lang"],
    )


def _require(*paths) -> None:
    for p in paths:
        if p is None or not Path(p).exists():
            raise InputFormatError(f"missing input: {p}")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- commands -----------------------------------------------------------------

def cmd_build(cfg: PipelineConfig, args) -> int:
    _require(cfg.src, cfg.tgt)
    vocab, sentences = corpus_mod.ingest(cfg.src, cfg.tgt)
    log.info("ingested %d sentence pairs, |V| = %d", len(sentences), vocab.size)
    g = build_graph(count_cooccurrences(sentences, vocab), vocab, cfg.threshold)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    corpus_mod.write_vocab(vocab, cfg.path(VOCAB))
    corpus_mod.write_sentences(sentences, cfg.path(SENTENCES))
    g.save(cfg.path(GRAPH))
    stats = graph_stats(g)
    _write_json(cfg.path(GRAPH_STATS), stats.as_dict())
    log.info("graph: %d nodes, %d edges, mean degree %.2f, mean extracted subgraph %.1f",
             stats.node_count, stats.edge_count, stats.mean_degree, stats.mean_extracted_size)
    return 0


def _load_graph(cfg):
    _require(cfg.path(VOCAB), cfg.path(GRAPH))
    vocab = corpus_mod.read_vocab(cfg.path(VOCAB))
    g = BilingualGraph.load(cfg.path(GRAPH))
    if g.node_count != vocab.size:
        raise InputFormatError("graph and vocabulary files do not match")
    return vocab, g


def cmd_cliques(cfg: PipelineConfig, args) -> int:
    vocab, g = _load_graph(cfg)
    pruned = corpus_mod.prune_by_frequency(vocab, cfg.min_freq)
    g_nn = g.induced(pruned.remap)
    cliques = list(all_maximal_cliques(g_nn, pruned, workers=cfg.workers))
    if not cliques:
        raise NoCliques("the frequency-pruned graph has no edges, so no cliques")
    corpus_mod.write_vocab(pruned, cfg.path(VOCAB_NN))
    g_nn.save(cfg.path(GRAPH_NN))
    n = write_cliques(cliques, g_nn, cfg.path(CLIQUES))
    log.info("%d words with frequency >= %d; %d maximal cliques", pruned.size, cfg.min_freq, n)
    return 0


def _load_training(cfg):
    _require(cfg.path(VOCAB_NN), cfg.path(GRAPH_NN), cfg.path(CLIQUES))
    vocab = corpus_mod.read_vocab(cfg.path(VOCAB_NN))
    g = BilingualGraph.load(cfg.path(GRAPH_NN))
    cliques = read_cliques(cfg.path(CLIQUES), g)
    return vocab, prepare_training_set(cliques, cfg.cbow())


def cmd_embed(cfg: PipelineConfig, args) -> int:
    if cfg.method != "nn":
        _write_json(cfg.path(f"embed_{cfg.method}.json"),
                    {"method": cfg.method, "dim": cfg.dim, "mode": "local"})
        log.info("%s spaces are built per query; nothing to train", cfg.method)
        return 0
    vocab, training = _load_training(cfg)
    emb = GlobalEmbedder.trained(training, vocab, cfg.cbow()).space
    emb.save(cfg.path(EMBEDDINGS))
    emb.save_report(cfg.path(CBOW_REPORT))
    losses = emb.report["epoch_loss"]
    log.info("trained %d-dim vectors on %d examples/epoch; epoch loss %.4f -> %.4f", emb.dim,
             emb.report["examples_per_epoch"], losses[0], losses[-1])
    return 0


def _embedder(cfg: PipelineConfig, retrainable: bool = False):
    if cfg.method == "nn":
        if retrainable:
            vocab, training = _load_training(cfg)
            return GlobalEmbedder.trained(training, vocab, cfg.cbow())
        _require(cfg.path(VOCAB_NN), cfg.path(EMBEDDINGS))
        vocab = corpus_mod.read_vocab(cfg.path(VOCAB_NN))
        tokens, vectors = read_embedding_file(cfg.path(EMBEDDINGS))
        if tokens != vocab.tokens:
            raise InputFormatError("embedding file does not match the pruned vocabulary")
        return GlobalEmbedder(GlobalEmbedding(vocab, vectors, None))
    vocab, g = _load_graph(cfg)
    return LocalEmbedder(g, vocab, cfg.method, cfg.dim)


def _query_space(embedder, word: str, lang: str):
    surface = normalize_word(word, TokenizerConfig())
    tok = Token(surface, lang)
    qid = embedder.vocab.get(tok)
    if qid is None:
        raise UnknownQuery(f"{tok} is not in the vocabulary")
    try:
        return tok, embedder.space_for(qid)
    except NoCliques as exc:
        raise UnknownQuery(f"{tok} has no sense cliques: {exc}") from exc


def cmd_translate(cfg: PipelineConfig, args) -> int:
    embedder = _embedder(cfg)
    tok, space = _query_space(embedder, args.word, cfg.lang)
    for rank, (cand, dist) in enumerate(knn_translate(space, tok, max(cfg.k), other_lang(cfg.lang)), 1):
        print(f"{rank}\t{cand}\t{dist:.9g}")
    return 0


def cmd_eval(cfg: PipelineConfig, args) -> int:
    _require(cfg.lexicon)
    pairs = read_lexicon(cfg.lexicon)
    reports = evaluate_both(pairs, _embedder(cfg), cfg.k)
    stem = f"eval_{cfg.method}"
    cfg.path(f"{stem}.json").write_text(reports_to_json(reports), encoding="utf-8")
    table = format_table(reports)
    cfg.path(f"{stem}.txt").write_text(table, encoding="utf-8")
    _write_json(cfg.path(f"{stem}_timing.json"),
                {r.direction: r.wall_time for r in reports})
    sys.stdout.write(table)
    return 0


def cmd_visualize(cfg: PipelineConfig, args) -> int:
    if cfg.method == "nn":
        raise InputFormatError("visualize works on the local pca/ca spaces")
    embedder = _embedder(cfg).with_dim(2)
    tok, space = _query_space(embedder, args.word, cfg.lang)
    words, vecs = space.words, space.word_vectors
    coords = np.zeros((len(words), 2))
    coords[:, :space.dim] = vecs[:, :2]
    order = np.arange(len(words))
    if args.nearest:
        q = coords[space.row_of(embedder.vocab.id_of(tok))]
        order = np.lexsort((words, np.linalg.norm(coords - q, axis=1)))[:args.nearest + 1]
    out = Path(args.output) if args.output else cfg.path(f"visualize_{cfg.method}_{tok.surface}.tsv")
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write("word\tx\ty\n")
        for k in order:
            x, y = coords[k] + 0.0
            f.write(f"{embedder.vocab.token(int(words[k]))}\t{x:.9g}\t{y:.9g}\n")
    log.info("wrote %d rows to %s", len(order), out)
    return 0


def cmd_tune(cfg: PipelineConfig, args) -> int:
    _require(cfg.lexicon)
    pairs = read_lexicon(cfg.lexicon)
    best, curve = tune_dimension(pairs, _embedder(cfg, retrainable=True), cfg.grid, cfg.k)
    _write_json(cfg.path(f"tune_{cfg.method}.json"),
                {"method": cfg.method, "best_dim": best, "curve": {str(d): s for d, s in curve.items()}})
    for d, s in curve.items():
        print(f"{d}\t{s:.4f}{'  *' if d == best else ''}")
    return 0


COMMANDS = {
    "build": cmd_build,
    "cliques": cmd_cliques,
    "embed": cmd_embed,
    "translate": cmd_translate,
    "eval": cmd_eval,
    "visualize": cmd_visualize,
    "tune": cmd_tune,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--out-dir", dest="out_dir", help="artifact directory (default $BSC_OUT_DIR or .)")
    common.add_argument("--src", help="source-language corpus, one sentence per line")
    common.add_argument("--tgt", help="target-language corpus, line-aligned with --src")
    common.add_argument("--threshold", type=float, help=f"edge weight threshold (default {DEFAULT_THRESHOLD})")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--dim", type=int)
    common.add_argument("--grid", help="comma-separated dimensions for tune")
    common.add_argument("--k", help="comma-separated k values (translate uses the largest)")
    common.add_argument("--lexicon", help="TSV of source<TAB>gold pairs")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--min-freq", dest="min_freq", type=int)
    common.add_argument("--epochs", type=int)
    common.add_argument("--negatives", type=int)
    common.add_argument("--lr", type=float)
    common.add_argument("--lang", choices=(SRC, TGT), help="language of the query word")

    common.add_argument("-q", "--quiet", action="store_true", help="only log warnings")

    parser = argparse.ArgumentParser(prog="bsc", description="Bilingual sense clique embeddings")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("translate", "visualize"):
            p.add_argument("word")
        if name == "visualize":
            p.add_argument("--nearest", type=int, help="keep only the N nearest words")
            p.add_argument("--output", help="TSV path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    quiet = args.quiet
    del args.quiet
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO,
                        format="bsc: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except BscError as exc:
        print(f"bsc: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"bsc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
