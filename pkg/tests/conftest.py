import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from termite.store import EmbeddingStore


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_store(rng, n, dim=8, prefix="e"):
    """Random store with unique names; no zero-norm rows."""
    vectors = rng.normal(size=(n, dim)).astype(np.float32)
    entities = [f"{prefix}{i:04d}" for i in range(n)]
    return EmbeddingStore(entities, vectors)
