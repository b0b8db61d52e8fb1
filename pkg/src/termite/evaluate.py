"""Evaluation harness: record linkage and concept expansion measured through
the join operator, plus a deterministic synthetic dataset generator for
desk-scale experiments.

Record linkage queries one representation of each real-world entity and
counts how many of its alternative representations come back.  Concept
expansion queries a single example instance of a concept and counts how many
further instances appear in rankings of 1x, 2x and 4x the concept size.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .extract import Triple
from .join import termite_join
from .refine import HubnessMetadata
from .store import EmbeddingStore


@dataclass
class LinkageGroundTruth:
    """Disjoint clusters; each cluster holds the representations of one
    real-world entity."""

    clusters: list[set[str]]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for cluster in self.clusters:
            if len(cluster) < 2:
                raise ValueError("linkage clusters need at least 2 members")
            if seen & cluster:
                raise ValueError("linkage clusters overlap")
            seen |= cluster


@dataclass
class ConceptGroundTruth:
    name: str
    instances: set[str]

    def __post_init__(self) -> None:
        if len(self.instances) < 2:
            raise ValueError(f"concept {self.name!r} needs at least 2 instances")


@dataclass
class ClusterOutcome:
    query: str
    size: int
    hits: int

    @property
    def recall(self) -> float:
        return self.hits / (self.size - 1)


@dataclass
class LinkageReport:
    outcomes: list[ClusterOutcome] = field(default_factory=list)

    @property
    def recall(self) -> float:
        total = sum(o.size - 1 for o in self.outcomes)
        return sum(o.hits for o in self.outcomes) / total if total else 0.0


@dataclass
class ExpansionOutcome:
    concept: str
    instances: int
    found: dict[int, int]  # multiplier -> instances retrieved

    def percent(self, multiplier: int) -> float:
        return self.found[multiplier] / self.instances


def record_linkage_report(
    store: EmbeddingStore, meta: HubnessMetadata, gt: LinkageGroundTruth
) -> LinkageReport:
    """Query each cluster's lexicographically first member for the rest."""
    missing = sorted(e for cluster in gt.clusters for e in cluster if e not in store)
    if missing:
        raise KeyError(f"ground-truth entities not in store: {missing}")
    report = LinkageReport()
    for cluster in gt.clusters:
        query = min(cluster)
        result = termite_join(store, meta, query, len(cluster) - 1)
        hits = sum(1 for entry in result.results if entry.entity in cluster)
        report.outcomes.append(ClusterOutcome(query=query, size=len(cluster), hits=hits))
    return report


def record_linkage_recall(
    store: EmbeddingStore, meta: HubnessMetadata, gt: LinkageGroundTruth
) -> float:
    return record_linkage_report(store, meta, gt).recall


def concept_expansion(
    store: EmbeddingStore,
    meta: HubnessMetadata,
    gt: ConceptGroundTruth,
    multipliers: Sequence[int] = (1, 2, 4),
) -> ExpansionOutcome:
    """Query the lexicographically first instance with k = multiplier * n."""
    query = min(gt.instances)
    if query not in store:
        raise KeyError(f"query instance not in store: {query!r}")
    n = len(gt.instances)
    found = {}
    for mult in multipliers:
        result = termite_join(store, meta, query, mult * n)
        found[mult] = sum(1 for entry in result.results if entry.entity in gt.instances)
    return ExpansionOutcome(concept=gt.name, instances=n, found=found)


def synth_dataset(
    groups: int, per_group: int, seed: int
) -> tuple[list[Triple], LinkageGroundTruth, list[ConceptGroundTruth]]:
    """Deterministic synthetic corpus of disjoint concept groups.

    Each group has per_group subject entities plus group-local predicates and
    objects; every entity occurs in at least 3 triples, all of them inside
    its own group.  Subjects sort before predicates and objects so they rank
    first among equally distant group members.  The groups double as both
    linkage clusters and concepts.
    """
    if groups < 2 or per_group < 3:
        raise ValueError("need groups >= 2 and per_group >= 3")
    n_pred = max(2, per_group // 2)
    n_obj = max(3, per_group // 2)
    rng = random.Random(seed)
    triples: list[Triple] = []
    clusters: list[set[str]] = []
    concepts: list[ConceptGroundTruth] = []
    for g in range(groups):
        subjects = [f"g{g:02d}_a{g:02d}{i:02d}" for i in range(per_group)]
        predicates = [f"g{g:02d}_p{g:02d}{j:02d}" for j in range(n_pred)]
        objects = [f"g{g:02d}_v{g:02d}{j:02d}" for j in range(n_obj)]
        for i in range(per_group):
            for t in range(3):
                triples.append(
                    Triple(
                        subject=subjects[i],
                        predicate=predicates[(i + t) % n_pred],
                        object=objects[(i + t) % n_obj],
                        source_id=f"synthetic-{seed}",
                        source_kind="unstructured",
                    )
                )
        clusters.append(set(subjects))
        concepts.append(ConceptGroundTruth(name=f"group-{g:02d}", instances=set(subjects)))
    rng.shuffle(triples)
    return triples, LinkageGroundTruth(clusters=clusters), concepts


def group_of(entity: str) -> str:
    """Group label of a synthetic entity (its name prefix)."""
    return entity.split("_", 1)[0]


def save_linkage(gt: LinkageGroundTruth, path: str | Path) -> None:
    """One cluster per line, members tab-separated and sorted."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for cluster in gt.clusters:
            fh.write("\t".join(sorted(cluster)) + "\n")


def load_linkage(path: str | Path) -> LinkageGroundTruth:
    clusters = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            members = [m for m in line.rstrip("\n").split("\t") if m]
            if members:
                clusters.append(set(members))
    return LinkageGroundTruth(clusters=clusters)


def save_concepts(concepts: Iterable[ConceptGroundTruth], path: str | Path) -> None:
    """concept<TAB>member lines."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for concept in concepts:
            for member in sorted(concept.instances):
                fh.write(f"{concept.name}\t{member}\n")


def load_concepts(path: str | Path) -> list[ConceptGroundTruth]:
    grouped: dict[str, set[str]] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            name, member = line.split("\t")
            grouped.setdefault(name, set()).add(member)
    return [ConceptGroundTruth(name=name, instances=members) for name, members in grouped.items()]


def write_linkage_report(report: LinkageReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("query\tcluster_size\thits\trecall\n")
        for o in report.outcomes:
            fh.write(f"{o.query}\t{o.size}\t{o.hits}\t{o.recall:.4f}\n")
        fh.write(f"TOTAL\t{sum(o.size for o in report.outcomes)}"
                 f"\t{sum(o.hits for o in report.outcomes)}\t{report.recall:.4f}\n")


def write_expansion_report(
    outcomes: Sequence[ExpansionOutcome], path: str | Path, multipliers: Sequence[int] = (1, 2, 4)
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        header = "concept\tinstances"
        for mult in multipliers:
            header += f"\tfound_{mult}x\tpercent_{mult}x"
        fh.write(header + "\n")
        for o in outcomes:
            row = f"{o.concept}\t{o.instances}"
            for mult in multipliers:
                row += f"\t{o.found[mult]}\t{o.percent(mult):.4f}"
            fh.write(row + "\n")


def format_expansion_table(
    outcomes: Sequence[ExpansionOutcome], multipliers: Sequence[int] = (1, 2, 4)
) -> str:
    """Human-readable expansion table: concept, instance count, and the
    found count plus percentage for each ranking size."""
    headers = ["Concept", "# Instances"] + [f"Found {m}x Top" for m in multipliers]
    rows = [
        [o.concept, str(o.instances)]
        + [f"{o.found[m]} ({o.percent(m):.0%})" for m in multipliers]
        for o in outcomes
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
