"""Maximal clique enumeration: per-word sense cliques and whole-graph mode.

Both modes run Bron-Kerbosch with Tomita pivoting over Python-int bitsets
on a small local vertex set. For a focus word that set is its extracted
subgraph (the word plus its neighbors); for the whole graph each vertex is
processed in degeneracy order with its later neighbors as candidates and
its earlier neighbors as excluded, so every clique is reported once.
"""

from __future__ import annotations

import heapq
import struct
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .corpus import Vocabulary
from .errors import ArtifactFormatError, CliqueBudgetExceeded, IsolatedNode
from .graph import BilingualGraph

SenseClique = tuple[int, ...]

FOCUS_BUDGET = 100_000
GLOBAL_BUDGET = 50_000_000

CLIQUE_MAGIC = b"BSCC"
CLIQUE_VERSION = 1


@dataclass(frozen=True)
class ExtractedSubgraph:
    focus: int
    members: np.ndarray    # ascending node-ids, focus included
    adjacency: tuple       # adjacency[k]: neighbors of members[k] that are members

    @property
    def size(self) -> int:
        return len(self.members)


def extract_subgraph(g: BilingualGraph, focus: int) -> ExtractedSubgraph:
    if not 0 <= focus < g.node_count:
        raise IndexError(f"node {focus} is outside the graph")
    nbrs = g.neighbors(focus)
    if len(nbrs) == 0:
        raise IsolatedNode(f"node {focus} has no neighbors")
    members = np.union1d(nbrs, [focus]).astype(np.int64)
    adjacency = tuple(
        np.intersect1d(g.neighbors(int(u)), members, assume_unique=True) for u in members
    )
    return ExtractedSubgraph(focus, members, adjacency)


class _Budget:
    __slots__ = ("limit", "count")

    def __init__(self, limit):
        self.limit = limit
        self.count = 0

    def tick(self):
        self.count += 1
        if self.count > self.limit:
            raise CliqueBudgetExceeded(self.limit)


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _expand(adj: list[int], r: list[int], p: int, x: int, out: list, budget: _Budget) -> None:
    if not p:
        if not x:
            budget.tick()
            out.append(list(r))
        return
    # Tomita pivot: the vertex of P|X with most neighbors in P
    best = -1
    pivot_nb = 0
    for u in _bits(p | x):
        c = (p & adj[u]).bit_count()
        if c > best:
            best, pivot_nb = c, adj[u]
    for v in _bits(p & ~pivot_nb):
        r.append(v)
        _expand(adj, r, p & adj[v], x & adj[v], out, budget)
        r.pop()
        p &= ~(1 << v)
        x |= 1 << v


def _mask(flags: np.ndarray) -> int:
    return int.from_bytes(np.packbits(flags, bitorder="little").tobytes(), "little")


def _local_adjacency(local_ids: np.ndarray, neighbor_lists) -> list[int]:
    """Bitsets over positions in ``local_ids`` (sorted) from sorted neighbor lists."""
    adj = []
    flags = np.zeros(len(local_ids), dtype=bool)
    for nb in neighbor_lists:
        _, _, pos = np.intersect1d(nb, local_ids, assume_unique=True, return_indices=True)
        flags[:] = False
        flags[pos] = True
        adj.append(_mask(flags))
    return adj


def _ensure_recursion(depth: int) -> None:
    need = depth + 200
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)


def maximal_cliques(sub: ExtractedSubgraph, max_cliques: int = FOCUS_BUDGET) -> list[SenseClique]:
    """All maximal cliques of the extracted subgraph that contain the focus.

    Because every member is adjacent to the focus, these are exactly the
    maximal cliques of the parent graph that contain the focus word.
    Returned sorted lexicographically.
    """
    members = sub.members
    adj = _local_adjacency(members, sub.adjacency)
    f = int(np.searchsorted(members, sub.focus))
    _ensure_recursion(len(members))
    found: list = []
    _expand(adj, [f], adj[f], 0, found, _Budget(max_cliques))
    cliques = [tuple(sorted(members[c].tolist())) for c in found]
    cliques.sort()
    return cliques


def degeneracy_order(g: BilingualGraph) -> np.ndarray:
    """Smallest-last vertex order; ties go to the lower node-id."""
    deg = g.degrees.astype(np.int64).copy()
    removed = np.zeros(g.node_count, dtype=bool)
    heap = [(int(d), i) for i, d in enumerate(deg)]
    heapq.heapify(heap)
    order = []
    while heap:
        d, v = heapq.heappop(heap)
        if removed[v] or d != deg[v]:
            continue
        removed[v] = True
        order.append(v)
        for u in g.neighbors(v).tolist():
            if not removed[u]:
                deg[u] -= 1
                heapq.heappush(heap, (int(deg[u]), u))
    return np.array(order, dtype=np.int64)


def _cliques_from(g: BilingualGraph, v: int, position: np.ndarray, budget: _Budget) -> list[SenseClique]:
    nbrs = g.neighbors(v).astype(np.int64)
    if len(nbrs) == 0:
        return []
    adj = _local_adjacency(nbrs, (g.neighbors(int(u)) for u in nbrs))
    later = position[nbrs] > position[v]
    found: list = []
    _expand(adj, [], _mask(later), _mask(~later), found, budget)
    return [tuple(sorted([v] + nbrs[c].tolist())) for c in found]


_worker_state: dict = {}


def _worker_init(g, position, limit):
    _worker_state.update(g=g, position=position, budget=_Budget(limit))


def _worker_chunk(vertices):
    st = _worker_state
    out = []
    for v in vertices:
        out.extend(_cliques_from(st["g"], v, st["position"], st["budget"]))
    return out


def all_maximal_cliques(g: BilingualGraph, vocab: Vocabulary | None = None,
                        max_cliques: int = GLOBAL_BUDGET, workers: int = 1) -> Iterator[SenseClique]:
    """Stream every maximal clique of size >= 2 of the whole graph, once each.

    ``vocab`` should be the frequency-pruned vocabulary the graph was built
    over; it is only used to check that the two agree. With ``workers > 1``
    outer vertices are farmed out in chunks and merged back in order, so the
    stream is the same as the serial one.
    """
    if vocab is not None and vocab.size != g.node_count:
        raise ValueError(f"graph has {g.node_count} nodes but vocabulary has {vocab.size}")
    order = degeneracy_order(g)
    position = np.empty(g.node_count, dtype=np.int64)
    position[order] = np.arange(g.node_count)
    _ensure_recursion(int(g.degrees.max(initial=0)))
    budget = _Budget(max_cliques)
    if workers <= 1:
        for v in order.tolist():
            yield from _cliques_from(g, v, position, budget)
        return

    import multiprocessing as mp

    chunk = max(1, len(order) // (workers * 16))
    chunks = [order[k:k + chunk].tolist() for k in range(0, len(order), chunk)]
    with mp.get_context("fork").Pool(workers, _worker_init, (g, position, max_cliques)) as pool:
        for part in pool.imap(_worker_chunk, chunks):
            for c in part:
                budget.tick()
                yield c


def sorted_cliques(cliques: Iterable[SenseClique]) -> list[SenseClique]:
    return sorted(tuple(c) for c in cliques)


# -- persistence -------------------------------------------------------------

def write_cliques(cliques: Iterable[SenseClique], graph: BilingualGraph, path) -> int:
    """Write cliques in lexicographic order; returns the number written."""
    ordered = sorted_cliques(cliques)
    buf = bytearray(CLIQUE_MAGIC)
    buf += struct.pack("<I", CLIQUE_VERSION)
    buf += graph.checksum()
    buf += struct.pack("<Q", len(ordered))
    for c in ordered:
        if len(c) > 0xFFFF:
            raise ValueError("clique too large for the file format")
        buf += struct.pack("<H", len(c))
        buf += np.asarray(c, dtype="<u4").tobytes()
    Path(path).write_bytes(bytes(buf))
    return len(ordered)


def read_cliques(path, graph: BilingualGraph | None = None) -> list[SenseClique]:
    """Load a clique file; with ``graph`` given, its checksum must match."""
    data = Path(path).read_bytes()
    if data[:4] != CLIQUE_MAGIC:
        raise ArtifactFormatError(f"{path}: not a clique file")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != CLIQUE_VERSION:
        raise ArtifactFormatError(f"{path}: unsupported clique file version {version}")
    checksum = data[8:40]
    if graph is not None and checksum != graph.checksum():
        raise ArtifactFormatError(f"{path}: cliques were built from a different graph")
    (count,) = struct.unpack_from("<Q", data, 40)
    pos = 48
    out = []
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        out.append(tuple(np.frombuffer(data, dtype="<u4", count=n, offset=pos).tolist()))
        pos += 4 * n
    return out
