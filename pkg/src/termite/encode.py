"""Encoding stage: dictionary-encode tokens and hash each bag of words into a
fixed-size binary vector.

Token ids are assigned incrementally as new tokens appear.  Each id is placed
into a vector of length F by a first hash; on collision a second hash is
tried; a second collision drops the id and bumps a counter.  F is sized from
the expected tokens per bag and a target collision probability using the
birthday approximation.

Both hashes are FNV-1a-64 over the 8 little-endian bytes of the id; the
second hash appends a single 0x01 byte as a domain separator.  Everything is
integer arithmetic, so vectors are bit-identical across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .extract import BagOfWords, tokenize

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

DEFAULT_VECTOR_SIZE = 1024  # near size_vector(5, 0.01), rounded to a power of two


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def hash_primary(token_id: int) -> int:
    return fnv1a64(token_id.to_bytes(8, "little"))


def hash_secondary(token_id: int) -> int:
    return fnv1a64(token_id.to_bytes(8, "little") + b"\x01")


def size_vector(m: int, p: float) -> int:
    """Smallest vector length F with birthday collision probability <= p.

    Uses 1 - exp(-m(m-1)/(2F)) <= p, i.e. F = ceil(m(m-1) / (-2 ln(1-p))).
    m < 2 cannot collide and yields F = 1.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"collision probability must be in (0, 1), got {p}")
    if m < 2:
        return 1
    return max(1, math.ceil(m * (m - 1) / (-2.0 * math.log1p(-p))))


class Dictionary:
    """Bijective token <-> dense integer id map, ids assigned incrementally."""

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._tokens: list[str] = []

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def assign(self, token: str) -> int:
        """Id of the token, assigning the next free id if unseen."""
        existing = self._ids.get(token)
        if existing is not None:
            return existing
        new_id = len(self._tokens)
        self._ids[token] = new_id
        self._tokens.append(token)
        return new_id

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def token_of(self, token_id: int) -> str:
        return self._tokens[token_id]

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            for i, token in enumerate(self._tokens):
                fh.write(f"{token}\t{i}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Dictionary":
        d = cls()
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh):
                line = line.rstrip("\n")
                if not line:
                    continue
                token, _, id_str = line.rpartition("\t")
                if int(id_str) != lineno:
                    raise ValueError(f"{path}: ids not dense at line {lineno + 1}")
                d.assign(token)
        return d


@dataclass(frozen=True)
class EncodedVector:
    """Binary vector of length F represented by its set positions."""

    length: int
    positions: frozenset[int]
    dropped: int = 0  # token ids lost to double collisions

    def dense(self) -> np.ndarray:
        v = np.zeros(self.length, dtype=np.float64)
        if self.positions:
            v[sorted(self.positions)] = 1.0
        return v


def encode_bow(dictionary: Dictionary, bow: BagOfWords, vector_size: int) -> EncodedVector:
    """Hash each distinct token's id into the vector, retrying once on collision.

    Ids are processed in ascending order so the retry outcome does not depend
    on bag iteration order.  Tokens must already be in the dictionary.
    """
    if vector_size < 1:
        raise ValueError(f"vector size must be >= 1, got {vector_size}")
    ids = sorted(dictionary.id_of(tok) for tok in bow.keys())
    positions: set[int] = set()
    dropped = 0
    for t in ids:
        slot = hash_primary(t) % vector_size
        if slot not in positions:
            positions.add(slot)
            continue
        slot = hash_secondary(t) % vector_size
        if slot not in positions:
            positions.add(slot)
        else:
            dropped += 1
    return EncodedVector(length=vector_size, positions=frozenset(positions), dropped=dropped)


@dataclass
class Encoder:
    """Frozen dictionary plus vector length: the text -> input-vector context."""

    dictionary: Dictionary
    vector_size: int = DEFAULT_VECTOR_SIZE

    def encode(self, text: str) -> EncodedVector:
        return encode_bow(self.dictionary, tokenize(text), self.vector_size)

    def encode_matrix(self, texts: Iterable[str]) -> np.ndarray:
        """Dense row-per-text matrix of encoded vectors."""
        texts = list(texts)
        out = np.zeros((len(texts), self.vector_size), dtype=np.float64)
        for i, text in enumerate(texts):
            for pos in self.encode(text).positions:
                out[i, pos] = 1.0
        return out


def build_dictionary(texts: Iterable[str]) -> Dictionary:
    """Assign ids to every token of every text, in the order given."""
    d = Dictionary()
    for text in texts:
        for token in sorted(tokenize(text).keys()):
            d.assign(token)
    return d
