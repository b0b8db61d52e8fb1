"""Training pairs: related pairs read off the triples, unrelated pairs sampled
at random from everything the triples never put together.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .extract import Triple

logger = logging.getLogger(__name__)

RELATED = 0
UNRELATED = 1


@dataclass(frozen=True)
class TrainingPair:
    a: str
    b: str
    label: int  # 0 related, 1 unrelated

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError(f"degenerate pair ({self.a!r}, {self.a!r})")
        if self.label not in (RELATED, UNRELATED):
            raise ValueError(f"label must be 0 or 1, got {self.label}")

    def key(self) -> tuple[str, str]:
        """Order-independent identity of the pair."""
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


def generate_pairs(triples: Iterable[Triple]) -> list[TrainingPair]:
    """Related pairs (subject,predicate), (predicate,object), (subject,object).

    Deduplicated as unordered pairs, first-seen order; pairs whose two sides
    are the same string are skipped.
    """
    seen: dict[tuple[str, str], TrainingPair] = {}
    for t in triples:
        for a, b in ((t.subject, t.predicate), (t.predicate, t.object), (t.subject, t.object)):
            if a == b:
                continue
            key = (a, b) if a <= b else (b, a)
            if key not in seen:
                seen[key] = TrainingPair(a, b, RELATED)
    return list(seen.values())


def sample_negatives(
    positives: Sequence[TrainingPair],
    entities: Iterable[str],
    ratio: float,
    seed: int,
) -> list[TrainingPair]:
    """Uniform random entity pairs that are not positives and not self-pairs.

    Draws floor(ratio * len(positives)) pairs with replacement, rejecting
    positives and self-pairs.  Returns fewer (with a warning) if the
    complement is too small to satisfy the count within the rejection budget.
    """
    pool = sorted(set(entities))
    if len(pool) < 2:
        raise ValueError(f"need at least 2 entities to sample negatives, got {len(pool)}")
    forbidden = {p.key() for p in positives}
    target = int(ratio * len(positives))
    rng = random.Random(seed)
    out: list[TrainingPair] = []
    budget = 100 * target + 1000
    while len(out) < target and budget > 0:
        budget -= 1
        a = pool[rng.randrange(len(pool))]
        b = pool[rng.randrange(len(pool))]
        if a == b:
            continue
        key = (a, b) if a <= b else (b, a)
        if key in forbidden:
            continue
        out.append(TrainingPair(a, b, UNRELATED))
    if len(out) < target:
        logger.warning(
            "negative sampling exhausted: wanted %d, produced %d", target, len(out)
        )
    return out


def write_pairs(pairs: Iterable[TrainingPair], path: str | Path) -> None:
    """Debug TSV: a, b, label."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(f"{p.a}\t{p.b}\t{p.label}\n")


def read_pairs(path: str | Path) -> list[TrainingPair]:
    pairs = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            a, b, label = line.split("\t")
            pairs.append(TrainingPair(a, b, int(label)))
    return pairs
