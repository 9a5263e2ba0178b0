"""BSC-word incidence matrices and their reduction to word coordinates.

Rows of the incidence matrix are sense cliques, columns are words, and a
cell is 1 when the word belongs to the clique. Two reductions are offered:

* PCA: rows are centered, ``S = Xc Xc^T`` is eigendecomposed, and words are
  placed at the columns of ``Y = P Xc`` where ``P`` holds the leading
  eigenvectors as rows.
* Correspondence analysis: SVD of the standardized residuals of the
  normalized table, with principal coordinates for both rows (cliques) and
  columns (words). Axis importance is the principal inertia of each axis.

Axes with zero importance are dropped, so ``dim`` can come out smaller than
requested; the embedding is then flagged ``truncated``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .clique import SenseClique, extract_subgraph, maximal_cliques, FOCUS_BUDGET
from .corpus import Token, Vocabulary, read_lines
from .errors import (ArtifactFormatError, DegenerateMatrixWarning, DimensionTooLarge,
                     EmptyCliqueSet, NoCliques, SvdNonConvergence)
from .graph import BilingualGraph

PCA = "pca"
CA = "ca"
METHODS = (PCA, CA)


@dataclass
class IncidenceMatrix:
    rows: list[SenseClique]
    cols: np.ndarray            # ascending node-ids
    cells: sp.csr_matrix        # binary, len(rows) x len(cols)
    vocab: Vocabulary | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def dense(self) -> np.ndarray:
        return self.cells.toarray().astype(np.float64)


def build_incidence(cliques: Sequence[SenseClique], vocab: Vocabulary | None = None) -> IncidenceMatrix:
    cliques = [tuple(c) for c in cliques]
    if not cliques:
        raise EmptyCliqueSet("no cliques to build an incidence matrix from")
    if any(len(c) < 2 for c in cliques):
        raise ValueError("sense cliques have at least two members")
    cols = np.unique(np.concatenate([np.asarray(c, dtype=np.int64) for c in cliques]))
    if vocab is not None and cols[-1] >= vocab.size:
        raise ValueError("clique member outside the vocabulary")
    r = np.repeat(np.arange(len(cliques)), [len(c) for c in cliques])
    c = np.searchsorted(cols, np.concatenate([np.asarray(c, dtype=np.int64) for c in cliques]))
    cells = sp.csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)),
                          shape=(len(cliques), len(cols)))
    return IncidenceMatrix(cliques, cols, cells, vocab)


@dataclass
class LocalEmbedding:
    method: str
    dim: int
    requested_dim: int
    words: np.ndarray              # node-ids, one per row of word_vectors
    word_vectors: np.ndarray
    cliques: list[SenseClique]
    clique_vectors: np.ndarray
    axis_importance: np.ndarray    # descending, one per kept axis
    total_importance: float        # over all axes, kept or not
    vocab: Vocabulary | None = None
    projection: np.ndarray | None = None   # PCA only: kept eigenvectors as rows
    singular_values: np.ndarray | None = None
    focus: int | None = None
    _row: dict = field(default_factory=dict, repr=False)

    @property
    def truncated(self) -> bool:
        return self.dim < self.requested_dim

    @property
    def word_coords(self) -> dict[int, np.ndarray]:
        return {int(w): v for w, v in zip(self.words, self.word_vectors)}

    @property
    def clique_coords(self) -> dict[int, np.ndarray]:
        return dict(enumerate(self.clique_vectors))

    def row_of(self, node_id: int) -> int | None:
        if not self._row:
            self._row.update((int(w), k) for k, w in enumerate(self.words))
        return self._row.get(int(node_id))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Column signs such that the first clearly nonzero entry is positive."""
    signs = np.ones(vectors.shape[1])
    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-10)
        if len(nz) and col[nz[0]] < 0:
            signs[k] = -1.0
    return signs


def _check_dim(d: int, shape) -> None:
    if d < 1 or d > min(shape):
        raise DimensionTooLarge(f"dimension {d} is outside 1..{min(shape)} for a {shape[0]}x{shape[1]} matrix")


def _kept_axes(d: int, rank: int, method: str) -> int:
    k = min(d, rank)
    if k < d:
        warnings.warn(f"{method}: matrix rank {rank} is below the requested dimension {d}; "
                      f"keeping {k} axes", DegenerateMatrixWarning, stacklevel=3)
    return k


def pca_reduce(m: IncidenceMatrix, d: int) -> LocalEmbedding:
    _check_dim(d, m.shape)
    x = m.dense()
    n = x.shape[0]
    xc = x - x.mean(axis=1, keepdims=True)
    s = xc @ xc.T
    eigvals, eigvecs = np.linalg.eigh(s)
    order = np.argsort(-eigvals, kind="stable")
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    eigvecs = eigvecs * _fix_signs(eigvecs)

    top = eigvals[0] if len(eigvals) else 0.0
    rank = int(np.sum(eigvals > 1e-10 * top)) if top > 0 else 0
    k = _kept_axes(d, rank, PCA)

    p = eigvecs[:, :k].T
    y = p @ xc
    denom = max(n - 1, 1)
    return LocalEmbedding(
        method=PCA, dim=k, requested_dim=d,
        words=m.cols.copy(), word_vectors=y.T.copy(),
        cliques=list(m.rows), clique_vectors=eigvecs[:, :k] * np.sqrt(eigvals[:k]),
        axis_importance=eigvals[:k] / denom, total_importance=float(eigvals.sum() / denom),
        vocab=m.vocab, projection=p, singular_values=np.sqrt(eigvals[:k]),
    )


def standardized_residuals(x: np.ndarray):
    """``D_r^-1/2 (P - r c^T) D_c^-1/2`` along with the masses ``r`` and ``c``.

    Computed in count space as ``(x - e) / sqrt(N e)`` with ``e`` the expected
    counts, so a table that fits the independence model exactly (e.g. a
    constant table) gives an exact zero matrix.
    """
    total = x.sum()
    rs = x.sum(axis=1)
    cs = x.sum(axis=0)
    expected = np.outer(rs, cs) / total
    resid = (x - expected) / np.sqrt(total * expected)
    return resid, rs / total, cs / total


def ca_reduce(m: IncidenceMatrix, d: int) -> LocalEmbedding:
    _check_dim(d, m.shape)
    x = m.dense()
    s, r, c = standardized_residuals(x)
    try:
        u, sv, vt = np.linalg.svd(s, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdNonConvergence(str(exc)) from exc
    signs = _fix_signs(u)
    u = u * signs
    v = vt.T * signs

    tol = max(max(s.shape) * np.finfo(float).eps * (sv[0] if len(sv) else 0.0), 1e-12)
    rank = int(np.sum(sv > tol))
    k = _kept_axes(d, rank, CA)

    f = u[:, :k] * sv[:k] / np.sqrt(r)[:, None]
    g = v[:, :k] * sv[:k] / np.sqrt(c)[:, None]
    return LocalEmbedding(
        method=CA, dim=k, requested_dim=d,
        words=m.cols.copy(), word_vectors=g,
        cliques=list(m.rows), clique_vectors=f,
        axis_importance=sv[:k] ** 2, total_importance=float(np.sum(sv ** 2)),
        vocab=m.vocab, singular_values=sv[:k],
    )


REDUCERS = {PCA: pca_reduce, CA: ca_reduce}


def reduce_cliques(cliques: Sequence[SenseClique], vocab: Vocabulary | None, method: str, d: int,
                   focus: int | None = None) -> LocalEmbedding:
    """Incidence matrix plus reduction, with ``d`` capped at the matrix size."""
    if method not in REDUCERS:
        raise ValueError(f"unknown reduction method {method!r}")
    m = build_incidence(cliques, vocab)
    with warnings.catch_warnings():
        # rank deficiency is routine for small local spaces; `truncated` records it
        warnings.simplefilter("ignore", DegenerateMatrixWarning)
        emb = REDUCERS[method](m, min(d, min(m.shape)))
    emb.requested_dim = d
    emb.focus = focus
    return emb


def embed_word_locally(g: BilingualGraph, vocab: Vocabulary, focus: int, method: str, d: int,
                       max_cliques: int = FOCUS_BUDGET) -> LocalEmbedding:
    """Local space of one word: its subgraph, its sense cliques, then PCA or CA."""
    cliques = maximal_cliques(extract_subgraph(g, focus), max_cliques)
    if not cliques:
        raise NoCliques(f"node {focus} has no sense cliques")
    return reduce_cliques(cliques, vocab, method, d, focus)


# -- shared embedding text format ---------------------------------------------

def write_embedding_file(path, tokens: Sequence[Token], vectors: np.ndarray) -> None:
    vectors = np.asarray(vectors, dtype=np.float64)
    dim = vectors.shape[1] if vectors.ndim == 2 else 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(tokens)} {dim}\n")
        for tok, vec in zip(tokens, vectors):
            f.write(" ".join([str(tok)] + [f"{v + 0.0:.9g}" for v in vec.tolist()]) + "\n")


def read_embedding_file(path) -> tuple[list[Token], np.ndarray]:
    lines = read_lines(path)
    if not lines:
        raise ArtifactFormatError(f"{path}: empty embedding file")
    count, dim = (int(x) for x in lines[0].split())
    if len(lines) - 1 != count:
        raise ArtifactFormatError(f"{path}: header announces {count} words, found {len(lines) - 1}")
    tokens = []
    vectors = np.zeros((count, dim))
    for k, line in enumerate(lines[1:]):
        parts = line.split(" ")
        if len(parts) != dim + 1:
            raise ArtifactFormatError(f"{path}:{k + 2}: expected {dim} values")
        tokens.append(Token.parse(parts[0]))
        vectors[k] = [float(v) for v in parts[1:]]
    return tokens, vectors
