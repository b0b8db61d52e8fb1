import hashlib

import numpy as np
import pytest

from termite.evaluate import (
    ConceptGroundTruth,
    LinkageGroundTruth,
    concept_expansion,
    format_expansion_table,
    group_of,
    load_concepts,
    load_linkage,
    record_linkage_recall,
    record_linkage_report,
    save_concepts,
    save_linkage,
    synth_dataset,
    write_expansion_report,
    write_linkage_report,
)
from termite.extract import entities_of, write_triples
from termite.pairs import generate_pairs
from termite.refine import HubnessMetadata, compute_hubness
from termite.store import EmbeddingStore


def oracle_store(entities):
    """One orthogonal basis vector per group, assigned without training."""
    groups = sorted({group_of(e) for e in entities})
    index = {g: i for i, g in enumerate(groups)}
    vectors = np.zeros((len(entities), len(groups)), dtype=np.float32)
    for i, e in enumerate(entities):
        vectors[i, index[group_of(e)]] = 1.0
    return EmbeddingStore(entities, vectors)


class TestSynthDataset:
    def test_reproducible_per_seed(self, tmp_path):
        one, _, _ = synth_dataset(3, 4, seed=11)
        two, _, _ = synth_dataset(3, 4, seed=11)
        assert one == two
        write_triples(one, tmp_path / "a.tsv")
        write_triples(two, tmp_path / "b.tsv")
        digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
        assert digest(tmp_path / "a.tsv") == digest(tmp_path / "b.tsv")
        other, _, _ = synth_dataset(3, 4, seed=12)
        assert other != one

    def test_every_entity_in_three_triples(self):
        triples, _, _ = synth_dataset(4, 5, seed=0)
        occurrences = {}
        for t in triples:
            for e in (t.subject, t.predicate, t.object):
                occurrences[e] = occurrences.get(e, 0) + 1
        assert min(occurrences.values()) >= 3

    def test_pairs_never_cross_groups(self):
        triples, _, _ = synth_dataset(5, 4, seed=3)
        for pair in generate_pairs(triples):
            assert group_of(pair.a) == group_of(pair.b)

    def test_ground_truth_matches_groups(self):
        triples, linkage, concepts = synth_dataset(3, 4, seed=1)
        assert len(linkage.clusters) == 3
        assert all(len(c) == 4 for c in linkage.clusters)
        assert len(concepts) == 3
        for concept, cluster in zip(concepts, linkage.clusters):
            assert concept.instances == cluster

    def test_minimums_enforced(self):
        with pytest.raises(ValueError):
            synth_dataset(1, 5, seed=0)
        with pytest.raises(ValueError):
            synth_dataset(3, 2, seed=0)


class TestGroundTruthValidation:
    def test_small_cluster_rejected(self):
        with pytest.raises(ValueError):
            LinkageGroundTruth(clusters=[{"only"}])

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            LinkageGroundTruth(clusters=[{"a", "b"}, {"b", "c"}])

    def test_concept_needs_two_instances(self):
        with pytest.raises(ValueError):
            ConceptGroundTruth(name="c", instances={"x"})


class TestOracleEmbedding:
    def setup_method(self):
        self.triples, self.linkage, self.concepts = synth_dataset(20, 10, seed=7)
        self.store = oracle_store(entities_of(self.triples))
        self.meta = compute_hubness(self.store, k=10)

    def test_recall_exactly_one(self):
        assert record_linkage_recall(self.store, self.meta, self.linkage) == 1.0

    def test_concept_1x_found_is_n_minus_one(self):
        for concept in self.concepts:
            outcome = concept_expansion(self.store, self.meta, concept)
            assert outcome.found[1] == len(concept.instances) - 1

    def test_report_rows(self):
        report = record_linkage_report(self.store, self.meta, self.linkage)
        assert len(report.outcomes) == 20
        assert all(o.hits == o.size - 1 for o in report.outcomes)


class TestShuffledEmbeddingChance:
    def _shuffled_store(self, entities, trial):
        local = np.random.default_rng(500 + trial)
        shuffled = list(entities)
        local.shuffle(shuffled)
        groups = sorted({group_of(e) for e in entities})
        index = {g: i for i, g in enumerate(groups)}
        vectors = np.zeros((len(entities), len(groups)), dtype=np.float32)
        for i, e in enumerate(shuffled):
            vectors[i, index[group_of(e)]] = 1.0
        # tiny unique jitter so ranks inside a bucket vary per trial
        vectors += local.uniform(0, 1e-3, size=vectors.shape).astype(np.float32)
        return EmbeddingStore(entities, vectors)

    def test_recall_close_to_permutation_expectation(self, rng):
        # With group vectors assigned to entities at random, hits follow the
        # hypergeometric count of same-cluster entities in a random K-subset.
        triples, linkage, _ = synth_dataset(6, 6, seed=2)
        entities = entities_of(triples)

        recalls = []
        for trial in range(40):
            store = self._shuffled_store(entities, trial)
            meta = HubnessMetadata(k=1, counts={e: 0 for e in entities}, cutoff=float("inf"))
            recalls.append(record_linkage_recall(store, meta, linkage))

        # Monte-Carlo permutation oracle for the expected chance recall.
        n = len(entities)
        mc = np.random.default_rng(9)
        expected = []
        for _ in range(1000):
            total_hits = 0
            total_targets = 0
            for cluster in linkage.clusters:
                k = len(cluster) - 1
                draw = mc.choice(n - 1, size=k, replace=False)
                total_hits += int(np.sum(draw < k))  # k same-cluster slots among n-1
                total_targets += k
            expected.append(total_hits / total_targets)
        assert abs(np.mean(recalls) - np.mean(expected)) < 0.05

    def test_expansion_close_to_sampling_expectation(self, rng):
        triples, _, concepts = synth_dataset(6, 6, seed=2)
        entities = entities_of(triples)
        n_entities = len(entities)

        found = []
        for trial in range(40):
            store = self._shuffled_store(entities, trial)
            meta = HubnessMetadata(k=1, counts={e: 0 for e in entities}, cutoff=float("inf"))
            for concept in concepts:
                outcome = concept_expansion(store, meta, concept, multipliers=(1,))
                found.append(outcome.found[1])

        # Sampling oracle: a 1x ranking behaves as a uniform K-subset of the
        # other entities; targets are the concept's remaining instances.
        mc = np.random.default_rng(13)
        n_inst = len(concepts[0].instances)
        draws = [
            int(np.sum(mc.choice(n_entities - 1, size=n_inst, replace=False) < n_inst - 1))
            for _ in range(3000)
        ]
        assert abs(np.mean(found) - np.mean(draws)) < 0.15


class TestExpansionCounting:
    def test_multiplier_percentages(self, rng):
        store = oracle_store(entities_of(synth_dataset(4, 6, seed=5)[0]))
        meta = compute_hubness(store, k=5)
        concept = ConceptGroundTruth(
            name="g00", instances={e for e in store.entities if group_of(e) == "g00" and "_a" in e}
        )
        outcome = concept_expansion(store, meta, concept, multipliers=(1, 2))
        n = len(concept.instances)
        assert outcome.found[1] == n - 1
        assert outcome.percent(1) == (n - 1) / n
        assert outcome.found[2] >= outcome.found[1]

    def test_missing_query_instance(self, rng):
        store = oracle_store(entities_of(synth_dataset(2, 3, seed=5)[0]))
        meta = compute_hubness(store, k=2)
        with pytest.raises(KeyError):
            concept_expansion(store, meta, ConceptGroundTruth("x", {"absent1", "absent2"}))

    def test_missing_linkage_entity_listed(self):
        store = oracle_store(entities_of(synth_dataset(2, 3, seed=5)[0]))
        meta = compute_hubness(store, k=2)
        gt = LinkageGroundTruth(clusters=[{"ghost-a", "ghost-b"}])
        with pytest.raises(KeyError, match="ghost-a"):
            record_linkage_recall(store, meta, gt)


class TestGroundTruthFiles:
    def test_linkage_round_trip(self, tmp_path):
        gt = LinkageGroundTruth(clusters=[{"b", "a"}, {"x", "y", "z"}])
        path = tmp_path / "linkage.tsv"
        save_linkage(gt, path)
        assert load_linkage(path).clusters == gt.clusters

    def test_concepts_round_trip(self, tmp_path):
        concepts = [
            ConceptGroundTruth("awards", {"turing", "godel"}),
            ConceptGroundTruth("schools", {"mit", "harvard", "caltech"}),
        ]
        path = tmp_path / "concepts.tsv"
        save_concepts(concepts, path)
        loaded = load_concepts(path)
        assert {c.name: c.instances for c in loaded} == {c.name: c.instances for c in concepts}


class TestReports:
    def test_linkage_tsv(self, tmp_path):
        store = oracle_store(entities_of(synth_dataset(3, 4, seed=1)[0]))
        meta = compute_hubness(store, k=3)
        _, linkage, _ = synth_dataset(3, 4, seed=1)
        report = record_linkage_report(store, meta, linkage)
        path = tmp_path / "linkage.tsv"
        write_linkage_report(report, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "query\tcluster_size\thits\trecall"
        assert len(lines) == 1 + 3 + 1
        assert lines[-1].startswith("TOTAL\t")

    def test_expansion_tsv_and_table(self, tmp_path):
        store = oracle_store(entities_of(synth_dataset(3, 4, seed=1)[0]))
        meta = compute_hubness(store, k=3)
        _, _, concepts = synth_dataset(3, 4, seed=1)
        outcomes = [concept_expansion(store, meta, c) for c in concepts]
        path = tmp_path / "expansion.tsv"
        write_expansion_report(outcomes, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].split("\t") == [
            "concept", "instances",
            "found_1x", "percent_1x", "found_2x", "percent_2x", "found_4x", "percent_4x",
        ]
        assert len(lines) == 1 + 3
        table = format_expansion_table(outcomes)
        assert "Concept" in table and "group-00" in table
