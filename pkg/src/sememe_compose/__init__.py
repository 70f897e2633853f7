"""Sememe-aware semantic composition for multiword expressions.

Builds MWE embeddings from constituent word embeddings plus sememe knowledge
(plain aggregation or mutual attention, optionally specialized per combination
rule), trains them with per-example SGD and exact analytic gradients, grades
semantic compositionality from sememe-set relations, and evaluates with
rank-correlation and ranking metrics.
"""

from .kb import (CombinationRule, KbDataset, KbError, LexEntry, MweEntry,
                 ScdLevel, SememeInventory, compute_scd, filter_sememes,
                 format_lexicon, format_mwes, mean_scd_by_rule, mwe_scd,
                 parse_kb, partition_by_rule, partition_by_scd, split_dataset)
from .embeddings import (EmbeddingFormatError, EmbeddingTable,
                         UnknownTokenError, init_random, load_embeddings,
                         read_embeddings)
from .compose import (ComposedOutput, ModelKind, ModelParams, aggregate_sememes,
                      attend, compose_add, compose_entry, compose_mul,
                      compose_scas, compose_scas_s, compose_scmsa,
                      composition_matrix_for_rule, forward, init_params)
from .train import (GradientSet, Hyperparams, NumericalError, TrainState,
                    align_sememe_table, backward, grad_check, load_checkpoint,
                    loss_sememe, loss_similarity, predict_sememes,
                    regularization, save_checkpoint, sgd_step, train)
from .metrics import (PredictionRecord, SimilarityPair, average_precision,
                      breakdown, cosine, evaluate_similarity, f1_at_threshold,
                      make_record, map_score, pearson, spearman, tune_delta)
from .synthetic import SyntheticConfig, SyntheticData, generate, write_files
from .estimator import SememeComposer

__version__ = "0.1.0"

__all__ = [
    "CombinationRule", "KbDataset", "KbError", "LexEntry", "MweEntry",
    "ScdLevel", "SememeInventory", "compute_scd", "filter_sememes",
    "format_lexicon", "format_mwes", "mean_scd_by_rule", "mwe_scd", "parse_kb",
    "partition_by_rule", "partition_by_scd", "split_dataset",
    "EmbeddingFormatError", "EmbeddingTable", "UnknownTokenError",
    "init_random", "load_embeddings", "read_embeddings",
    "ComposedOutput", "ModelKind", "ModelParams", "aggregate_sememes",
    "attend", "compose_add", "compose_entry", "compose_mul", "compose_scas",
    "compose_scas_s", "compose_scmsa", "composition_matrix_for_rule",
    "forward", "init_params",
    "GradientSet", "Hyperparams", "NumericalError", "TrainState",
    "align_sememe_table", "backward", "grad_check", "load_checkpoint",
    "loss_sememe", "loss_similarity", "predict_sememes", "regularization",
    "save_checkpoint", "sgd_step", "train",
    "PredictionRecord", "SimilarityPair", "average_precision", "breakdown",
    "cosine", "evaluate_similarity", "f1_at_threshold", "make_record",
    "map_score", "pearson", "spearman", "tune_delta",
    "SyntheticConfig", "SyntheticData", "generate", "write_files",
    "SememeComposer",
]
