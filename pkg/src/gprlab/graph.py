"""Immutable undirected graphs in CSR form, plus ingestion and preprocessing.

A self-loop contributes exactly 1 to the degree of its vertex, so that the
degree vector equals the row sums of the (0/1) adjacency matrix and the walk
matrix ``W = A D^-1`` is column stochastic.
"""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or community input."""


class ZeroDegreeError(ValueError):
    """Raised when diffusion touches a vertex without neighbours."""


class Graph:
    """Undirected, unweighted graph stored as a symmetric CSR adjacency.

    Construct with :meth:`from_edges`; the arrays are frozen afterwards.
    """

    __slots__ = ("n", "indptr", "indices", "degree", "total_degree", "_adj")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.degree = np.diff(self.indptr).astype(np.float64)
        self.total_degree = float(self.degree.sum())
        for arr in (self.indptr, self.indices, self.degree):
            arr.setflags(write=False)
        data = np.ones(self.indices.size, dtype=np.float64)
        self._adj = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @classmethod
    def from_edges(cls, n: int, u: Iterable[int], v: Iterable[int]) -> "Graph":
        """Build from endpoint arrays; duplicates and orientation are ignored."""
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise ValueError("endpoint arrays differ in length")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
            raise ValueError("edge endpoint out of range")
        loop = u == v
        rows = np.concatenate([u, v[~loop]])
        cols = np.concatenate([v, u[~loop]])
        codes = np.unique(rows * n + cols)
        rows, cols = np.divmod(codes, n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n, indptr, cols)

    @property
    def adjacency(self) -> sp.csr_matrix:
        return self._adj

    @property
    def num_edges(self) -> int:
        """Number of undirected edges, self-loops counted once."""
        loops = int(self.adjacency.diagonal().sum())
        return (self.indices.size - loops) // 2 + loops

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Each undirected edge once, as ``(u, v)`` with ``u <= v``."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows <= self.indices
        return rows[keep], self.indices[keep]

    def induced_subgraph(self, vertices: Sequence[int]) -> tuple["Graph", "VertexMap"]:
        """Subgraph on ``vertices``; new indices follow ascending parent order."""
        keep = np.unique(np.asarray(vertices, dtype=np.int64))
        if keep.size and (keep[0] < 0 or keep[-1] >= self.n):
            raise IndexError("vertex index out of range")
        sub = self.adjacency[keep][:, keep].tocsr()
        sub.sort_indices()
        return Graph(keep.size, sub.indptr, sub.indices), VertexMap(keep)

    def permuted(self, perm: np.ndarray) -> "Graph":
        """Relabel vertex ``v`` as ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        u, v = self.edges()
        return Graph.from_edges(self.n, perm[u], perm[v])

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


@dataclass(frozen=True)
class VertexMap:
    """Dense index -> original id, with originals strictly increasing.

    Maps produced by preprocessing point at the parent graph's indices; use
    :meth:`compose` to get back to file ids.
    """

    original: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.original, dtype=np.int64)
        if arr.size > 1 and np.any(np.diff(arr) <= 0):
            raise ValueError("original ids must be strictly increasing")
        arr.setflags(write=False)
        object.__setattr__(self, "original", arr)

    @classmethod
    def identity(cls, n: int) -> "VertexMap":
        return cls(np.arange(n, dtype=np.int64))

    def __len__(self) -> int:
        return self.original.size

    def to_dense(self, ids, missing: int = -1) -> np.ndarray:
        """Dense indices of original ``ids``; absent ids become ``missing``."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.original.size == 0:
            return np.full(ids.shape, missing, dtype=np.int64)
        pos = np.searchsorted(self.original, ids)
        pos_c = np.minimum(pos, self.original.size - 1)
        found = (pos < self.original.size) & (self.original[pos_c] == ids)
        return np.where(found, pos_c, missing)

    def to_original(self, dense) -> np.ndarray:
        return self.original[np.asarray(dense, dtype=np.int64)]

    def compose(self, outer: "VertexMap") -> "VertexMap":
        """``self`` maps into ``outer``'s dense space; return map to ``outer``'s originals."""
        return VertexMap(outer.original[self.original])

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["original", "dense"])
            for dense, orig in enumerate(self.original.tolist()):
                w.writerow([orig, dense])

    @classmethod
    def read_csv(cls, path: str | os.PathLike) -> "VertexMap":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        rows.sort(key=lambda r: int(r["dense"]))
        if [int(r["dense"]) for r in rows] != list(range(len(rows))):
            raise GraphFormatError(f"{path}: dense column is not 0..n-1")
        return cls(np.array([int(r["original"]) for r in rows], dtype=np.int64))


@dataclass
class CommunitySet:
    """Possibly overlapping communities over dense vertex indices."""

    communities: list[np.ndarray] = field(default_factory=list)
    dropped_members: int = 0
    dropped_communities: int = 0

    def __post_init__(self):
        self.communities = [np.unique(np.asarray(c, dtype=np.int64)) for c in self.communities]

    def __len__(self) -> int:
        return len(self.communities)

    def __iter__(self):
        return iter(self.communities)

    def __getitem__(self, i):
        return self.communities[i]

    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.communities], dtype=np.int64)

    def remap(self, vmap: VertexMap) -> "CommunitySet":
        """Carry communities into a subgraph whose map points at our indices."""
        out, dropped, empty = [], 0, 0
        for c in self.communities:
            dense = vmap.to_dense(c)
            kept = dense[dense >= 0]
            dropped += c.size - kept.size
            if kept.size:
                out.append(kept)
            else:
                empty += 1
        return CommunitySet(out, self.dropped_members + dropped, self.dropped_communities + empty)


def _parse_ids(line: str, path, lineno: int, expect: int | None) -> list[int]:
    tokens = line.split()
    if expect is not None:
        tokens = tokens[:expect] if len(tokens) >= expect else tokens
        if len(tokens) != expect:
            raise GraphFormatError(f"{path}:{lineno}: expected {expect} ids, got {line.strip()!r}")
    try:
        ids = [int(t) for t in tokens]
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: non-integer token in {line.strip()!r}") from None
    if any(i < 0 for i in ids):
        raise GraphFormatError(f"{path}:{lineno}: negative id")
    return ids


def load_edge_list(path: str | os.PathLike) -> tuple[Graph, VertexMap]:
    """Read a SNAP-style edge list (``u v`` per line, ``#`` comments).

    Extra columns after the first two are ignored. Ids are densified in
    ascending order.
    """
    us, vs = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            a, b = _parse_ids(s, path, lineno, 2)
            us.append(a)
            vs.append(b)
    if not us:
        raise GraphFormatError(f"{path}: no edges")
    u = np.array(us, dtype=np.int64)
    v = np.array(vs, dtype=np.int64)
    vmap = VertexMap(np.unique(np.concatenate([u, v])))
    g = Graph.from_edges(len(vmap), vmap.to_dense(u), vmap.to_dense(v))
    return g, vmap


def write_edge_list(g: Graph, path: str | os.PathLike, vmap: VertexMap | None = None) -> None:
    u, v = g.edges()
    if vmap is not None:
        u, v = vmap.to_original(u), vmap.to_original(v)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# undirected graph: {g.n} vertices, {g.num_edges} edges\n")
        fh.writelines(f"{a} {b}\n" for a, b in zip(u.tolist(), v.tolist()))


def load_communities(path: str | os.PathLike, vmap: VertexMap) -> CommunitySet:
    """Read one community per line (SNAP ``.cmty`` layout), remapped via ``vmap``.

    Ids missing from ``vmap`` are dropped and counted; a line left with no
    members is skipped with a warning.
    """
    comms, dropped, empty = [], 0, 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            ids = np.array(_parse_ids(s, path, lineno, None), dtype=np.int64)
            dense = vmap.to_dense(ids)
            kept = dense[dense >= 0]
            dropped += ids.size - kept.size
            if kept.size == 0:
                empty += 1
                logger.warning("%s:%d: community has no surviving members; skipped", path, lineno)
                continue
            comms.append(kept)
    if dropped:
        logger.info("%s: dropped %d members absent from the vertex map", path, dropped)
    return CommunitySet(comms, dropped, empty)


def write_communities(cs: CommunitySet, path: str | os.PathLike, vmap: VertexMap | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in cs:
            ids = vmap.to_original(c) if vmap is not None else c
            fh.write("\t".join(map(str, ids.tolist())) + "\n")


def largest_connected_component(g: Graph) -> tuple[Graph, VertexMap]:
    """Largest component; ties go to the component holding the smallest index."""
    ncomp, labels = connected_components(g.adjacency, directed=False)
    if ncomp == 1:
        return g, VertexMap.identity(g.n)
    sizes = np.bincount(labels, minlength=ncomp)
    _, first = np.unique(labels, return_index=True)
    largest = np.flatnonzero(sizes == sizes.max())
    best = largest[np.argmin(first[largest])]
    return g.induced_subgraph(np.flatnonzero(labels == best))


def bfs_distances(g: Graph, seeds, max_hops: int | None = None) -> np.ndarray:
    """Multi-source hop distances; unreached vertices get -1."""
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    if seeds.size == 0:
        raise ValueError("seed set is empty")
    if seeds[0] < 0 or seeds[-1] >= g.n:
        raise IndexError("seed index out of range")
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[seeds] = 0
    frontier, hop = seeds, 0
    adj = g.adjacency
    while frontier.size and (max_hops is None or hop < max_hops):
        hop += 1
        nbrs = np.unique(adj[frontier].indices)
        nbrs = nbrs[dist[nbrs] < 0]
        dist[nbrs] = hop
        frontier = nbrs
    return dist


def bfs_subgraph(g: Graph, seeds, hops: int) -> tuple[Graph, VertexMap]:
    """Induced subgraph on everything within ``hops`` steps of the seeds."""
    if hops < 0:
        raise ValueError("hops must be >= 0")
    dist = bfs_distances(g, seeds, hops)
    return g.induced_subgraph(np.flatnonzero(dist >= 0))


def max_seed_eccentricity(g: Graph, seeds) -> int:
    """Largest hop distance from any vertex to the seed set."""
    dist = bfs_distances(g, seeds)
    if np.any(dist < 0):
        raise ValueError("graph is disconnected: some vertices cannot reach the seeds")
    return int(dist.max())


def walk_step(g: Graph, x: np.ndarray, check: bool = True) -> np.ndarray:
    """One random-walk step ``W x`` with ``W = A D^-1``."""
    x = np.asarray(x, dtype=np.float64)
    if check:
        if x.shape != (g.n,):
            raise ValueError(f"distribution has shape {x.shape}, expected ({g.n},)")
        if np.any(x < 0) or abs(x.sum() - 1.0) > 1e-9:
            raise ValueError("x is not a probability distribution")
    deg = g.degree
    if check and np.any(deg == 0):
        raise ZeroDegreeError(f"vertex {int(np.flatnonzero(deg == 0)[0])} has degree 0")
    return g.adjacency @ (x / deg)
