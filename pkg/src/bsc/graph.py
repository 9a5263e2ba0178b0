"""Bilingual co-occurrence graph.

Two tokens are linked when they appear in the same bilingual sentence. The
edge weight is the sentence-level co-occurrence count divided by the
product of the two corpus frequencies, and edges below a threshold are
dropped (this removes most links to function words such as *of*, *a*).
"""

from __future__ import annotations

import hashlib
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .corpus import Vocabulary
from .errors import ArtifactFormatError, ZeroFrequency

DEFAULT_THRESHOLD = 3e-4

GRAPH_MAGIC = b"BSCG"
GRAPH_VERSION = 1
EDGE_DTYPE = np.dtype([("i", "<u4"), ("j", "<u4"), ("w", "<f8")])

_CHUNK_PAIRS = 4_000_000


def count_cooccurrences(sentences: Iterable[np.ndarray], vocab: Vocabulary) -> sp.csr_matrix:
    """Symmetric sparse matrix of sentence-level co-occurrence counts.

    A sentence contributes at most one count per unordered pair, however
    often the two tokens repeat inside it. The diagonal is never stored.
    """
    n = vocab.size
    total = sp.csr_matrix((n, n), dtype=np.int64)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    pending = 0

    def flush():
        nonlocal total, pending
        if not rows:
            return
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        data = np.ones(len(r), dtype=np.int64)
        total = total + sp.coo_matrix((data, (r, c)), shape=(n, n)).tocsr()
        rows.clear()
        cols.clear()
        pending = 0

    for sent in sentences:
        u = np.unique(sent)
        if len(u) and (u[0] < 0 or u[-1] >= n):
            raise ValueError("sentence holds a node-id outside the vocabulary")
        if len(u) < 2:
            continue
        iu, ju = np.triu_indices(len(u), 1)
        rows.append(u[iu])
        cols.append(u[ju])
        pending += len(iu)
        if pending >= _CHUNK_PAIRS:
            flush()
    flush()

    sym = (total + total.T).tocsr()
    sym.sort_indices()
    return sym


@dataclass
class BilingualGraph:
    """Undirected weighted graph in CSR form with ascending neighbor lists."""

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    threshold: float = 0.0
    _adj_sets: list | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, node_count: int, edges, threshold: float = 0.0) -> "BilingualGraph":
        """Build from ``(i, j)`` or ``(i, j, w)`` tuples; weight defaults to 1."""
        ii, jj, ww = [], [], []
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if i == j:
                raise ValueError("self-loops are not allowed")
            ii += [i, j]
            jj += [j, i]
            ww += [w, w]
        m = sp.coo_matrix((ww, (ii, jj)), shape=(node_count, node_count)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(node_count, m.indptr.astype(np.int64), m.indices.astype(np.int32),
                   m.data.astype(np.float64), threshold)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def neighbor_weights(self, i: int) -> np.ndarray:
        return self.weights[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def weight(self, i: int, j: int) -> float:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        if k < len(nb) and nb[k] == j:
            return float(self.neighbor_weights(i)[k])
        return 0.0

    def adjacency_sets(self) -> list[set[int]]:
        if self._adj_sets is None:
            self._adj_sets = [set(self.neighbors(i).tolist()) for i in range(self.node_count)]
        return self._adj_sets

    def edges(self):
        """Edge arrays ``(i, j, w)`` listing each edge once with ``i < j``."""
        rows = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degrees)
        upper = rows < self.indices
        return rows[upper], self.indices[upper].astype(np.int64), self.weights[upper]

    def induced(self, remap: np.ndarray) -> "BilingualGraph":
        """Subgraph on nodes with ``remap[old] >= 0``, relabelled to ``remap[old]``."""
        i, j, w = self.edges()
        keep = (remap[i] >= 0) & (remap[j] >= 0)
        n = int(remap.max()) + 1 if len(remap) else 0
        return _from_upper(n, remap[i[keep]], remap[j[keep]], w[keep], self.threshold)

    def to_bytes(self) -> bytes:
        i, j, w = self.edges()
        header = GRAPH_MAGIC + struct.pack("<IIQd", GRAPH_VERSION, self.node_count,
                                           len(i), self.threshold)
        rec = np.empty(len(i), dtype=EDGE_DTYPE)
        rec["i"], rec["j"], rec["w"] = i, j, w
        return header + rec.tobytes()

    def checksum(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "BilingualGraph":
        data = Path(path).read_bytes()
        if data[:4] != GRAPH_MAGIC:
            raise ArtifactFormatError(f"{path}: not a graph file")
        version, n, m, threshold = struct.unpack_from("<IIQd", data, 4)
        if version != GRAPH_VERSION:
            raise ArtifactFormatError(f"{path}: unsupported graph version {version}")
        offset = 4 + struct.calcsize("<IIQd")
        if len(data) != offset + m * EDGE_DTYPE.itemsize:
            raise ArtifactFormatError(f"{path}: truncated edge list")
        rec = np.frombuffer(data, dtype=EDGE_DTYPE, count=m, offset=offset)
        return _from_upper(n, rec["i"].astype(np.int64), rec["j"].astype(np.int64),
                           rec["w"].astype(np.float64), threshold)


def _from_upper(n, i, j, w, threshold) -> BilingualGraph:
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    data = np.concatenate([w, w])
    m = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    m.sort_indices()
    return BilingualGraph(n, m.indptr.astype(np.int64), m.indices.astype(np.int32),
                          m.data.astype(np.float64), float(threshold))


def edge_weights(counts: sp.spmatrix, vocab: Vocabulary):
    """Upper-triangle pairs with their counts and weights, before filtering."""
    upper = sp.triu(counts, k=1).tocoo()
    i = upper.row.astype(np.int64)
    j = upper.col.astype(np.int64)
    co = upper.data.astype(np.int64)
    keep = co > 0
    i, j, co = i[keep], j[keep], co[keep]
    fr = vocab.freqs
    if len(i) and (np.any(fr[i] <= 0) or np.any(fr[j] <= 0)):
        raise ZeroFrequency("a co-occurring node has zero corpus frequency")
    w = co.astype(np.float64) / (fr[i].astype(np.float64) * fr[j].astype(np.float64))
    return i, j, co, w


def build_graph(counts: sp.spmatrix, vocab: Vocabulary,
                threshold: float = DEFAULT_THRESHOLD) -> BilingualGraph:
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    i, j, _, w = edge_weights(counts, vocab)
    keep = w >= threshold
    return _from_upper(vocab.size, i[keep], j[keep], w[keep], threshold)


def export_tsv(counts: sp.spmatrix, vocab: Vocabulary, graph: BilingualGraph, path) -> None:
    """Inspection dump of the stored edges: ``i, j, Co, EW``."""
    i, j, co, w = edge_weights(counts, vocab)
    keep = w >= graph.threshold
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("i\tj\tco\tew\n")
        for a, b, c, x in zip(i[keep].tolist(), j[keep].tolist(), co[keep].tolist(), w[keep].tolist()):
            f.write(f"{a}\t{b}\t{c}\t{x!r}\n")


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    degree_histogram: dict[int, int]
    mean_degree: float
    mean_extracted_size: float

    def as_dict(self):
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "mean_degree": self.mean_degree,
            "mean_extracted_size": self.mean_extracted_size,
            "degree_histogram": {str(k): v for k, v in sorted(self.degree_histogram.items())},
        }


def graph_stats(g: BilingualGraph) -> GraphStats:
    """Read-only summary.

    ``mean_extracted_size`` is the average number of nodes in a focus word's
    extracted subgraph (the word plus its neighbors), over non-isolated words.
    """
    deg = g.degrees
    hist = dict(Counter(deg.tolist()))
    mean_degree = 2.0 * g.edge_count / g.node_count if g.node_count else 0.0
    connected = deg[deg > 0]
    mean_ext = float(connected.mean() + 1) if len(connected) else 0.0
    return GraphStats(g.node_count, g.edge_count, hist, mean_degree, mean_ext)

