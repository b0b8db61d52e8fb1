import json
import math

import numpy as np
import pytest

from termite.refine import (
    HubnessMetadata,
    UnionFind,
    compute_hubness,
    hubness_counts,
    merge_distances,
    percentile_cutoff,
    persistence_confidence,
)
from termite.store import EmbeddingStore

from conftest import random_store
from oracles import hubness_oracle, percentile_oracle


class TestHubnessCounts:
    def test_two_entities_mutual(self):
        vecs = np.array([[1.0, 0.1], [0.1, 1.0]], dtype=np.float32)
        store = EmbeddingStore(["a", "b"], vecs)
        assert hubness_counts(store, 1) == {"a": 1, "b": 1}

    def test_star_center_collects_all(self):
        # center near every spoke; spokes mutually farther than the center
        n = 6
        dim = n + 1
        vecs = np.zeros((n + 1, dim), dtype=np.float32)
        vecs[0, :] = 1.0  # center
        for i in range(n):
            vecs[i + 1, i] = 1.0
            vecs[i + 1, n] = 0.4  # lean every spoke toward the center
        store = EmbeddingStore([f"s{i}" for i in range(n)] + ["center"], vecs[[*range(1, n + 1), 0]])
        counts = hubness_counts(store, 1)
        assert counts["center"] == n

    def test_sum_is_k_times_n(self, rng):
        store = random_store(rng, 30)
        for k in (1, 5, 12):
            counts = hubness_counts(store, k)
            assert sum(counts.values()) == k * len(store)

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(5):
            n = int(rng.integers(20, 60))
            store = random_store(rng, n, dim=5)
            k = int(rng.integers(1, 10))
            assert hubness_counts(store, k) == hubness_oracle(
                store.entities, store.vectors.tolist(), k
            )

    def test_k_out_of_range(self, rng):
        store = random_store(rng, 5)
        for bad in (0, 5, 7):
            with pytest.raises(ValueError):
                hubness_counts(store, bad)


class TestPercentileCutoff:
    def test_nearest_rank_examples(self):
        assert percentile_cutoff([1, 1, 1, 3]) == 1
        assert percentile_cutoff([5]) == 5
        assert percentile_cutoff([1, 2, 3, 4]) == 3

    def test_permutation_invariant(self, rng):
        values = list(rng.integers(0, 50, size=40))
        shuffled = list(values)
        rng.shuffle(shuffled)
        assert percentile_cutoff(values) == percentile_cutoff(shuffled)

    def test_accepts_mapping(self):
        assert percentile_cutoff({"a": 1, "b": 2, "c": 3, "d": 4}) == 3

    def test_matches_oracle(self, rng):
        for _ in range(50):
            values = list(rng.integers(0, 100, size=int(rng.integers(1, 60))))
            q = float(rng.uniform(0.05, 0.95))
            assert percentile_cutoff(values, q) == percentile_oracle(values, q)

    def test_cutoff_is_observed_value(self, rng):
        values = list(rng.integers(0, 9, size=17))
        assert percentile_cutoff(values) in values

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            percentile_cutoff([])


class TestMetadata:
    def test_compute_and_json_round_trip(self, rng, tmp_path):
        store = random_store(rng, 20)
        meta = compute_hubness(store, k=4)
        assert sum(meta.counts.values()) == 4 * 20
        path = tmp_path / "hubness.json"
        meta.save(path)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert set(payload) == {"k", "cutoff", "counts"}
        loaded = HubnessMetadata.load(path)
        assert loaded == meta

    def test_save_is_deterministic(self, rng, tmp_path):
        store = random_store(rng, 15)
        meta = compute_hubness(store, k=3)
        meta.save(tmp_path / "one.json")
        meta.save(tmp_path / "two.json")
        assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()

    def test_is_hub_respects_infinite_cutoff(self):
        meta = HubnessMetadata(k=1, counts={"a": 100}, cutoff=math.inf)
        assert not meta.is_hub("a")


class TestUnionFind:
    def test_basic_merging(self):
        uf = UnionFind(4)
        assert uf.union(0, 1)
        assert not uf.union(1, 0)
        assert uf.find(0) == uf.find(1)
        assert uf.find(2) != uf.find(0)
        uf.union(2, 3)
        uf.union(0, 3)
        assert len({uf.find(i) for i in range(4)}) == 1


class TestMergeDistances:
    def test_chain_takes_max_edge(self):
        # distances: 0-1 = 1, 1-2 = 2, 0-2 = 5 -> MST is the chain
        d = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 2.0], [5.0, 2.0, 0.0]])
        merge = merge_distances(d, source=0)
        assert merge.tolist() == [0.0, 1.0, 2.0]


class TestPersistenceConfidence:
    def test_single_candidate_scores_one(self, rng):
        store = random_store(rng, 5)
        conf = persistence_confidence(store, store.entities[0], [store.entities[1]])
        assert conf == {store.entities[1]: 1.0}

    def test_collinear_chain_exact(self):
        # Integer vectors of norm 3: distances are the exact rationals
        # 1/9 (q,a), 2/9 (a,b), 5/9 (q,b), so the tree is the chain q-a-b
        # and merge thresholds are 1/9 and 2/9: conf(a)=1/2, conf(b)=0.
        vecs = np.array([[2, 1, 2], [2, 2, 1], [2, 2, -1]], dtype=np.float32)
        store = EmbeddingStore(["q", "a", "b"], vecs)
        conf = persistence_confidence(store, "q", ["a", "b"])
        assert conf["a"] == pytest.approx(0.5, abs=1e-9)
        assert conf["b"] == pytest.approx(0.0, abs=1e-9)

    def test_collinear_angles_variant(self):
        # points at angles giving cosine distances 0.1 (q,a) and 0.2 (a,b)
        t1 = math.acos(0.9)
        t2 = t1 + math.acos(0.8)
        vecs = np.array(
            [[1.0, 0.0], [math.cos(t1), math.sin(t1)], [math.cos(t2), math.sin(t2)]],
            dtype=np.float32,
        )
        store = EmbeddingStore(["q", "a", "b"], vecs)
        conf = persistence_confidence(store, "q", ["a", "b"])
        assert conf["a"] == pytest.approx(0.5, abs=1e-6)
        assert conf["b"] == pytest.approx(0.0, abs=1e-9)

    def test_tied_at_max_scores_zero(self):
        # b and c share a vector, so both join the query at the same (max)
        # threshold and both score exactly 0; a joins early and scores high.
        vecs = np.array(
            [[1.0, 0.0], [0.99, 0.14], [0.0, 1.0], [0.0, 1.0]], dtype=np.float32
        )
        store = EmbeddingStore(["q", "a", "b", "c"], vecs)
        conf = persistence_confidence(store, "q", ["a", "b", "c"])
        assert conf["b"] == 0.0 and conf["c"] == 0.0
        assert conf["a"] > 0.9

    def test_monotone_in_merge_distance(self, rng):
        for _ in range(100):
            n = int(rng.integers(3, 20))
            store = random_store(rng, n)
            query = store.entities[0]
            candidates = store.entities[1:]
            conf = persistence_confidence(store, query, candidates)
            vecs = np.stack([store.vector(e) for e in [query, *candidates]])
            unit = vecs / np.linalg.norm(vecs, axis=1)[:, None]
            merge = merge_distances(np.clip(1.0 - unit @ unit.T, 0, 2), source=0)[1:]
            for i in range(len(candidates)):
                for j in range(len(candidates)):
                    if merge[i] <= merge[j]:
                        assert conf[candidates[i]] >= conf[candidates[j]] - 1e-12

    def test_range_and_extremes(self, rng):
        for _ in range(30):
            store = random_store(rng, int(rng.integers(3, 15)))
            conf = persistence_confidence(store, store.entities[0], store.entities[1:])
            values = list(conf.values())
            assert all(0.0 <= v <= 1.0 for v in values)
            assert min(values) == 0.0 or all(v == 1.0 for v in values)

    def test_unknown_entity_rejected(self, rng):
        store = random_store(rng, 4)
        with pytest.raises(KeyError):
            persistence_confidence(store, "ghost", [store.entities[0]])
        with pytest.raises(KeyError):
            persistence_confidence(store, store.entities[0], ["ghost"])

    def test_no_candidates_rejected(self, rng):
        store = random_store(rng, 4)
        with pytest.raises(ValueError):
            persistence_confidence(store, store.entities[0], [])
