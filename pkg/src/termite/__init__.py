"""termite: a shared vector embedding over relational and text entities,
refined against hubness, queried for the K most related entities."""

from .encode import Dictionary, EncodedVector, Encoder, build_dictionary, encode_bow, size_vector
from .extract import (
    BagOfWords,
    Table,
    Triple,
    guess_key,
    ingest_triples,
    read_csv_table,
    relational_to_triples,
    tokenize,
)
from .join import EntityNotFound, JoinEntry, JoinResult, termite_join
from .pairs import TrainingPair, generate_pairs, sample_negatives
from .refine import (
    HubnessMetadata,
    compute_hubness,
    hubness_counts,
    percentile_cutoff,
    persistence_confidence,
)
from .siamese import (
    SiameseModel,
    TrainConfig,
    contrastive_loss,
    forward,
    init_model,
    load_model,
    save_model,
    train,
)
from .store import EmbeddingStore, Neighbor, build_store, cosine_distance, knn

__version__ = "0.1.0"

__all__ = [
    "BagOfWords",
    "Dictionary",
    "EmbeddingStore",
    "EncodedVector",
    "Encoder",
    "EntityNotFound",
    "HubnessMetadata",
    "JoinEntry",
    "JoinResult",
    "Neighbor",
    "SiameseModel",
    "Table",
    "TrainConfig",
    "TrainingPair",
    "Triple",
    "build_dictionary",
    "build_store",
    "compute_hubness",
    "contrastive_loss",
    "cosine_distance",
    "encode_bow",
    "forward",
    "generate_pairs",
    "guess_key",
    "hubness_counts",
    "ingest_triples",
    "init_model",
    "knn",
    "load_model",
    "percentile_cutoff",
    "persistence_confidence",
    "read_csv_table",
    "relational_to_triples",
    "sample_negatives",
    "save_model",
    "size_vector",
    "termite_join",
    "tokenize",
    "train",
]
