"""Extraction stage: turn relational tables and pre-extracted text triples
into a uniform stream of (subject, predicate, object) triples.

Relational tables are converted by guessing a key column and pairing the key
cell with every other cell in the row.  Cell values carry a ``:value`` suffix
and attribute names an ``:attribute`` suffix so that entities coming from
structured data stay distinguishable from free-text entities.  Text triples
(produced upstream by external information-extraction tools) are ingested
from tab-separated files.
"""

from __future__ import annotations

import csv
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

VALUE_SUFFIX = ":value"
ATTRIBUTE_SUFFIX = ":attribute"

# A bag of words is a multiset of lowercase tokens.
BagOfWords = Counter

_TOKEN_SPLIT = re.compile(r"[\W_]+", re.UNICODE)


class ExtractionError(ValueError):
    """Raised for malformed tables or triple files."""


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str
    source_id: str
    source_kind: str  # "structured" | "unstructured"

    def __post_init__(self) -> None:
        for name in ("subject", "predicate", "object"):
            if not getattr(self, name).strip():
                raise ExtractionError(f"triple {name} is empty")
        if self.source_kind not in ("structured", "unstructured"):
            raise ExtractionError(f"unknown source_kind {self.source_kind!r}")


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[tuple[str, ...]] = field(default_factory=list)

    def __post_init__(self) -> None:
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ExtractionError(
                    f"table {self.name!r}: row {i} has {len(row)} cells, expected {width}"
                )


def tokenize(s: str) -> BagOfWords:
    """Lowercase and split on every non-alphanumeric character.

    Returns an empty bag for punctuation-only input.
    """
    return Counter(t for t in _TOKEN_SPLIT.split(s.lower()) if t)


def guess_key(table: Table) -> int:
    """Index of the column with the highest ratio of distinct values to rows.

    Ties go to the leftmost column.
    """
    if not table.columns or not table.rows:
        raise ExtractionError("empty-table")
    n = len(table.rows)
    best_idx, best_ratio = 0, -1.0
    for c in range(len(table.columns)):
        ratio = len({row[c] for row in table.rows}) / n
        if ratio > best_ratio:
            best_idx, best_ratio = c, ratio
    return best_idx


def relational_to_triples(table: Table) -> list[Triple]:
    """One triple per (row, non-key column) pair: key cell - attribute - cell.

    Empty cells produce no triple; rows with an empty key cell are skipped.
    """
    key = guess_key(table)
    triples = []
    for row in table.rows:
        key_cell = row[key].strip()
        if not key_cell:
            continue
        for c, cell in enumerate(row):
            if c == key:
                continue
            cell = cell.strip()
            if not cell:
                continue
            triples.append(
                Triple(
                    subject=key_cell + VALUE_SUFFIX,
                    predicate=table.columns[c] + ATTRIBUTE_SUFFIX,
                    object=cell + VALUE_SUFFIX,
                    source_id=table.name,
                    source_kind="structured",
                )
            )
    return triples


def read_csv_table(path: str | Path) -> Table:
    """Read a UTF-8 CSV file with a header row into a Table."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise ExtractionError(f"{path}: missing header row") from None
        rows = []
        for row in reader:
            if len(row) != len(columns):
                raise ExtractionError(
                    f"{path}: row {reader.line_num} has {len(row)} cells, expected {len(columns)}"
                )
            rows.append(tuple(row))
    return Table(name=path.stem, columns=columns, rows=rows)


def ingest_triples(path: str | Path) -> list[Triple]:
    """Read tab-separated triples: subject, predicate, object[, source_id].

    The fourth column defaults to the file name.  Lines with fewer than three
    fields are an error; lines with an empty field are skipped and counted.
    """
    path = Path(path)
    triples = []
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ExtractionError(
                    f"{path}:{lineno}: expected at least 3 tab-separated fields, got {len(fields)}"
                )
            s, p, o = (f.strip() for f in fields[:3])
            if not (s and p and o):
                skipped += 1
                continue
            source = fields[3].strip() if len(fields) >= 4 and fields[3].strip() else path.name
            triples.append(
                Triple(subject=s, predicate=p, object=o, source_id=source, source_kind="unstructured")
            )
    if skipped:
        logger.warning("%s: skipped %d lines with empty fields", path, skipped)
    return triples


def write_triples(triples: Iterable[Triple], path: str | Path) -> None:
    """Write triples as TSV: subject, predicate, object, source_id."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for t in triples:
            fh.write(f"{t.subject}\t{t.predicate}\t{t.object}\t{t.source_id}\n")


def read_triples(path: str | Path) -> list[Triple]:
    """Read a TSV triple file written by :func:`write_triples`.

    Unlike :func:`ingest_triples` this keeps whatever source_kind semantics
    the producer had; kind is restored from the role suffixes.
    """
    out = []
    for t in ingest_triples(path):
        structured = (
            t.subject.endswith(VALUE_SUFFIX)
            and t.predicate.endswith(ATTRIBUTE_SUFFIX)
            and t.object.endswith(VALUE_SUFFIX)
        )
        out.append(
            Triple(
                subject=t.subject,
                predicate=t.predicate,
                object=t.object,
                source_id=t.source_id,
                source_kind="structured" if structured else "unstructured",
            )
        )
    return out


def entities_of(triples: Iterable[Triple]) -> list[str]:
    """Sorted distinct entity strings: all subjects, predicates and objects."""
    seen = set()
    for t in triples:
        seen.add(t.subject)
        seen.add(t.predicate)
        seen.add(t.object)
    return sorted(seen)
