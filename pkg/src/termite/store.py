"""Entity embedding store: every entity's vector, computed offline, plus
exact nearest-neighbor queries under cosine distance.

The store is a plain contiguous float32 matrix scanned in full for every
query; at desk scale (<= 1e5 entities) that is both fast enough and exactly
correct.  Ties are broken by entity string so results are deterministic.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .encode import Encoder
from .siamese import SiameseModel, forward_batch

logger = logging.getLogger(__name__)

STORE_MAGIC = b"TEMB"
_ZERO_NORM_NUDGE = 1e-9
_BUILD_CHUNK = 2048


@dataclass(frozen=True)
class Neighbor:
    entity: str
    distance: float


class EmbeddingStore:
    """Immutable entity -> vector collection with full-scan cosine queries."""

    def __init__(self, entities: Sequence[str], vectors: np.ndarray) -> None:
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(entities):
            raise ValueError(
                f"{len(entities)} entities but vector matrix of shape {vectors.shape}"
            )
        if len(set(entities)) != len(entities):
            raise ValueError("duplicate entity strings")
        norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero-norm vectors in store")
        self.entities: list[str] = list(entities)
        self.vectors: np.ndarray = vectors
        self._index = {e: i for i, e in enumerate(self.entities)}
        self._unit = vectors.astype(np.float64) / norms[:, None]
        # Lexicographic rank per row, used to break distance ties.
        self._rank = np.empty(len(self.entities), dtype=np.intp)
        self._rank[np.argsort(np.array(self.entities, dtype=object))] = np.arange(
            len(self.entities)
        )

    def __len__(self) -> int:
        return len(self.entities)

    def __contains__(self, entity: str) -> bool:
        return entity in self._index

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, entity: str) -> int:
        return self._index[entity]

    def vector(self, entity: str) -> np.ndarray:
        return self.vectors[self._index[entity]].astype(np.float64)

    def distances_to(self, query: np.ndarray) -> np.ndarray:
        """Cosine distance from the query to every stored vector."""
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"query has shape {q.shape}, store dim is {self.dim}")
        norm = np.linalg.norm(q)
        if norm == 0.0:
            raise ValueError("zero-norm query vector")
        return np.clip(1.0 - self._unit @ (q / norm), 0.0, 2.0)

    def ranked_indices(self, distances: np.ndarray) -> np.ndarray:
        """Row indices sorted by (distance, entity string)."""
        return np.lexsort((self._rank, distances))

    def save(self, path: str | Path) -> None:
        """Binary little-endian: magic, u32 dim, u64 count, then per entity
        u32 byte length + UTF-8 string + dim float32 values."""
        with Path(path).open("wb") as fh:
            fh.write(STORE_MAGIC)
            fh.write(struct.pack("<IQ", self.dim, len(self.entities)))
            for entity, row in zip(self.entities, self.vectors):
                raw = entity.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
                fh.write(np.ascontiguousarray(row, dtype="<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        with Path(path).open("rb") as fh:
            if fh.read(4) != STORE_MAGIC:
                raise ValueError(f"{path}: not an embedding file")
            dim, count = struct.unpack("<IQ", fh.read(12))
            entities = []
            vectors = np.empty((count, dim), dtype=np.float32)
            for i in range(count):
                (length,) = struct.unpack("<I", fh.read(4))
                entities.append(fh.read(length).decode("utf-8"))
                vectors[i] = np.frombuffer(fh.read(4 * dim), dtype="<f4")
        return cls(entities, vectors)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), clamped into [0, 2]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance undefined for zero-norm vectors")
    return float(np.clip(1.0 - float(u @ v) / (nu * nv), 0.0, 2.0))


def build_store(
    model: SiameseModel, entities: Iterable[str], encoder: Encoder
) -> EmbeddingStore:
    """Embed every distinct entity through the network.

    Zero-norm outputs (possible for degenerate weights) are nudged by adding
    1e-9 to the first coordinate so every stored vector has a usable norm.
    """
    unique = list(dict.fromkeys(entities))
    if not unique:
        raise ValueError("no entities to embed")
    rows = np.empty((len(unique), model.embedding_dim), dtype=np.float32)
    for start in range(0, len(unique), _BUILD_CHUNK):
        chunk = unique[start : start + _BUILD_CHUNK]
        rows[start : start + len(chunk)] = forward_batch(
            model, encoder.encode_matrix(chunk)
        ).astype(np.float32)
    zero = np.linalg.norm(rows.astype(np.float64), axis=1) == 0.0
    if np.any(zero):
        rows[zero, 0] += _ZERO_NORM_NUDGE
        logger.warning("nudged %d zero-norm embeddings", int(zero.sum()))
    return EmbeddingStore(unique, rows)


def knn(store: EmbeddingStore, query: np.ndarray, k: int) -> list[Neighbor]:
    """Exact top-k by cosine distance, full scan, ties by entity string."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return []
    distances = store.distances_to(query)
    order = store.ranked_indices(distances)[: min(k, len(store))]
    return [Neighbor(store.entities[i], float(distances[i])) for i in order]
