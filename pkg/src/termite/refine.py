"""Refinement stage: per-entity hubness counts with a percentile cutoff, and
an optional confidence score for query results based on how persistently a
candidate stays connected to the query as the distance threshold grows.

Hubness is the tendency of some vectors to appear in many nearest-neighbor
lists; such vectors look related to everything and poison rankings.  The
counts computed here are consumed at query time to filter them out.

The confidence score is the 0-dimensional persistence of the candidate: the
distance at which its component merges with the query's, read off the
minimum spanning tree of the candidate neighborhood.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .store import EmbeddingStore

DEFAULT_NEIGHBORHOOD = 10


@dataclass
class HubnessMetadata:
    k: int  # neighborhood size used for counting
    counts: dict[str, int]
    cutoff: float  # integer percentile in practice; +inf disables filtering

    def is_hub(self, entity: str) -> bool:
        return self.counts.get(entity, 0) > self.cutoff

    def save(self, path: str | Path) -> None:
        payload = {"k": self.k, "cutoff": self.cutoff, "counts": self.counts}
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "HubnessMetadata":
        with Path(path).open(encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(k=payload["k"], counts=payload["counts"], cutoff=payload["cutoff"])


def hubness_counts(store: EmbeddingStore, k: int) -> dict[str, int]:
    """How many k-NN lists each entity appears in.

    For every stored x, the k nearest other entities (cosine, ties by
    string) each get one count.  Counts sum to k * n.
    """
    n = len(store)
    if not 1 <= k < n:
        raise ValueError(f"neighborhood size must be in [1, {n - 1}], got {k}")
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        distances = store.distances_to(store.vectors[i].astype(np.float64))
        distances[i] = np.inf  # a point is not its own neighbor
        for j in store.ranked_indices(distances)[:k]:
            counts[j] += 1
    return {e: int(c) for e, c in zip(store.entities, counts)}


def percentile_cutoff(counts: Mapping[str, int] | Sequence[int], q: float = 0.75) -> int:
    """Nearest-rank percentile of the counts: sorted ascending, value at
    rank ceil(q * n), 1-based."""
    values = sorted(counts.values() if isinstance(counts, Mapping) else counts)
    if not values:
        raise ValueError("no counts")
    rank = max(1, int(np.ceil(q * len(values))))
    return values[rank - 1]


def compute_hubness(store: EmbeddingStore, k: int = DEFAULT_NEIGHBORHOOD) -> HubnessMetadata:
    counts = hubness_counts(store, k)
    return HubnessMetadata(k=k, counts=counts, cutoff=percentile_cutoff(counts))


class UnionFind:
    """Disjoint sets over range(n) with path compression and union by size."""

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def _minimum_spanning_tree(dmat: np.ndarray) -> list[tuple[int, int, float]]:
    """Kruskal over a complete graph given as a symmetric distance matrix."""
    n = dmat.shape[0]
    edges = sorted(
        ((float(dmat[i, j]), i, j) for i in range(n) for j in range(i + 1, n))
    )
    uf = UnionFind(n)
    tree = []
    for w, i, j in edges:
        if uf.union(i, j):
            tree.append((i, j, w))
            if len(tree) == n - 1:
                break
    return tree


def merge_distances(dmat: np.ndarray, source: int = 0) -> np.ndarray:
    """For each node, the threshold at which it joins the source's component
    as edges are added in distance order: the max edge weight on the MST path
    from the source."""
    n = dmat.shape[0]
    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i, j, w in _minimum_spanning_tree(dmat):
        adjacency[i].append((j, w))
        adjacency[j].append((i, w))
    merge = np.full(n, np.nan)
    merge[source] = 0.0
    stack = [source]
    while stack:
        node = stack.pop()
        for nxt, w in adjacency[node]:
            if np.isnan(merge[nxt]):
                merge[nxt] = max(merge[node], w)
                stack.append(nxt)
    return merge


def persistence_confidence(
    store: EmbeddingStore, query: str, candidates: Sequence[str]
) -> dict[str, float]:
    """Confidence in [0, 1] per candidate: 1 - merge_distance / max merge.

    Candidates that stay connected to the query at small distances score
    high; the candidate whose component joins last scores 0.  If all merge
    distances are equal (including a single candidate) everything scores 1.
    """
    if not candidates:
        raise ValueError("no candidates")
    names = [query] + [c for c in candidates if c != query]
    if len(names) < 2:
        raise ValueError("no candidates besides the query")
    for name in names:
        if name not in store:
            raise KeyError(f"entity not in store: {name!r}")
    vecs = np.stack([store.vector(name) for name in names])
    unit = vecs / np.linalg.norm(vecs, axis=1)[:, None]
    dmat = np.clip(1.0 - unit @ unit.T, 0.0, 2.0)
    merge = merge_distances(dmat, source=0)[1:]
    top = float(merge.max())
    if top == 0.0 or np.all(merge == merge[0]):
        return {name: 1.0 for name in names[1:]}
    return {name: float(1.0 - m / top) for name, m in zip(names[1:], merge)}
