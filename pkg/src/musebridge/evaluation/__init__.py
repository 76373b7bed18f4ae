"""Objective evaluation: distribution distances, label divergence, and ranking."""

from .manifest import load_manifest
from .metrics import (
    cosine_similarity,
    fit_gaussian,
    frechet_distance,
    ib_rank,
    kl_divergence,
    matrix_sqrt_psd,
)
from .report import emit_json, emit_markdown, emit_report, write_report
from .runner import (
    BackendEmbeddingSource,
    FileEmbeddingSource,
    load_embedding_file,
    normalize_metrics,
    run_eval,
)
from .types import (
    EmbeddingVector,
    EvalManifest,
    EvalReport,
    GaussianStats,
    LabelDistribution,
    ManifestItem,
)

__all__ = [
    "BackendEmbeddingSource",
    "EmbeddingVector",
    "EvalManifest",
    "EvalReport",
    "FileEmbeddingSource",
    "GaussianStats",
    "LabelDistribution",
    "ManifestItem",
    "cosine_similarity",
    "emit_json",
    "emit_markdown",
    "emit_report",
    "fit_gaussian",
    "frechet_distance",
    "ib_rank",
    "kl_divergence",
    "load_embedding_file",
    "load_manifest",
    "matrix_sqrt_psd",
    "normalize_metrics",
    "run_eval",
    "write_report",
]
