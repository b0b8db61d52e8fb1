"""The query operator: K most related entities for a stored entity, with
hub filtering and padding.

Ranking all other entities by cosine distance, entities whose hubness count
exceeds the cutoff are dropped; hubs that fell inside the original top-K
window are reported separately, and the list is padded from further down the
ranking until K survivors are found.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .refine import HubnessMetadata, persistence_confidence
from .store import EmbeddingStore, knn

logger = logging.getLogger(__name__)


class EntityNotFound(KeyError):
    """Query entity absent from the store."""

    def __init__(self, entity: str) -> None:
        super().__init__(entity)
        self.entity = entity

    def __str__(self) -> str:
        return f"entity-not-found: {self.entity!r}"


@dataclass(frozen=True)
class JoinEntry:
    entity: str
    distance: float
    hubness: int
    confidence: float | None = None


@dataclass
class JoinResult:
    query: str
    results: list[JoinEntry] = field(default_factory=list)
    removed_hubs: list[JoinEntry] = field(default_factory=list)


def termite_join(
    store: EmbeddingStore,
    meta: HubnessMetadata,
    entity: str,
    k: int,
    with_confidence: bool = False,
) -> JoinResult:
    """Top-k non-hub entities related to a stored entity.

    The query entity itself is never returned.  Hubs inside the unfiltered
    top-k window are recorded in removed_hubs; replacements stream in from
    the next-closest non-hubs.  Fewer than k results means the store ran out
    of non-hub entities.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if entity not in store:
        raise EntityNotFound(entity)

    ranking = [n for n in knn(store, store.vector(entity), len(store)) if n.entity != entity]

    results: list[JoinEntry] = []
    removed: list[JoinEntry] = []
    for i, neighbor in enumerate(ranking):
        if len(results) >= k and i >= k:
            break
        count = meta.counts.get(neighbor.entity, 0)
        if count > meta.cutoff:
            if i < k:
                removed.append(JoinEntry(neighbor.entity, neighbor.distance, count))
            continue
        if len(results) < k:
            results.append(JoinEntry(neighbor.entity, neighbor.distance, count))
    if len(results) < k:
        logger.warning(
            "query %r: only %d non-hub entities available for k=%d",
            entity,
            len(results),
            k,
        )

    if with_confidence and results:
        candidates = [n.entity for n in ranking[: 4 * k]]
        present = set(candidates)
        candidates.extend(e.entity for e in results if e.entity not in present)
        scores = persistence_confidence(store, entity, candidates)
        results = [
            JoinEntry(e.entity, e.distance, e.hubness, scores[e.entity]) for e in results
        ]
    return JoinResult(query=entity, results=results, removed_hubs=removed)
