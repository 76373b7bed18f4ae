"""Core metric math: Gaussian fits, Frechet distance, KL divergence, rank scoring.

All functions are pure and operate on the carriers in ``types``; linear
algebra is delegated to numpy/scipy.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from ..errors import (
    DimensionMismatch,
    InsufficientSamples,
    LabelMismatch,
    MissingSimilarity,
    NotSymmetric,
    ZeroVector,
)
from .types import EmbeddingVector, GaussianStats, LabelDistribution

KL_EPSILON = 1e-10
SYMMETRY_TOL = 1e-9
EIGENVALUE_FLOOR = -1e-9
COVARIANCE_JITTER = 1e-10
NEGATIVE_DISTANCE_TOL = 1e-8


def _stack(embeddings: Sequence[EmbeddingVector]) -> np.ndarray:
    dims = {e.dim for e in embeddings}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed embedding dimensions: {sorted(dims)}")
    return np.stack([e.as_array() for e in embeddings])


def fit_gaussian(embeddings: Sequence[EmbeddingVector]) -> GaussianStats:
    """Arithmetic mean and unbiased (n-1) sample covariance, symmetrized."""
    if len(embeddings) < 2:
        raise InsufficientSamples(f"need at least 2 embeddings, got {len(embeddings)}")
    data = _stack(embeddings)
    mean = data.mean(axis=0)
    cov = np.atleast_2d(np.cov(data, rowvar=False, ddof=1))
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, covariance=cov, sample_count=data.shape[0])


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix.

    Eigendecomposition with negative eigenvalues clamped to zero, so slightly
    indefinite inputs (numerical noise) still yield a PSD result.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {m.shape}")
    if float(np.max(np.abs(m - m.T))) > SYMMETRY_TOL:
        raise NotSymmetric(f"matrix asymmetry exceeds {SYMMETRY_TOL}")
    sym = (m + m.T) / 2.0
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Distance between two Gaussians:

        ||mu_a - mu_b||^2 + tr(S_a) + tr(S_b) - 2 tr((S_a^1/2 S_b S_a^1/2)^1/2)

    The inner product is formed symmetrically for numerical stability, with a
    small diagonal jitter when noise pushes eigenvalues below the floor.
    Tiny negative results (|noise| < 1e-8) are clamped to zero.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.mean - b.mean
    a_half = matrix_sqrt_psd(a.covariance)
    inner = a_half @ b.covariance @ a_half
    inner = (inner + inner.T) / 2.0
    if float(np.linalg.eigvalsh(inner).min()) < EIGENVALUE_FLOOR:
        inner = inner + COVARIANCE_JITTER * np.eye(inner.shape[0])
    cross = matrix_sqrt_psd(inner)
    value = float(
        diff @ diff
        + np.trace(a.covariance)
        + np.trace(b.covariance)
        - 2.0 * np.trace(cross)
    )
    if value < 0.0:
        if value < -NEGATIVE_DISTANCE_TOL:
            raise ArithmeticError(f"frechet distance {value} negative beyond tolerance")
        value = 0.0
    return value


def kl_divergence(p: LabelDistribution, q: LabelDistribution) -> float:
    """KL(p || q) in nats over epsilon-smoothed, renormalized distributions.

    ``p`` is the reference distribution. Smoothing adds 1e-10 to every
    probability before renormalizing, so zeros in ``q`` stay finite.
    """
    if p.labels != q.labels:
        raise LabelMismatch("label vocabularies differ")
    p_arr = np.asarray(p.probs, dtype=np.float64) + KL_EPSILON
    q_arr = np.asarray(q.probs, dtype=np.float64) + KL_EPSILON
    p_arr /= p_arr.sum()
    q_arr /= q_arr.sum()
    return float(np.sum(p_arr * np.log(p_arr / q_arr)))


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")
    av, bv = a.as_array(), b.as_array()
    na, nb = float(np.linalg.norm(av)), float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    return float(np.clip(av @ bv / (na * nb), -1.0, 1.0))


def ib_rank(similarities: Sequence[Mapping[str, float]]) -> dict[str, float]:
    """Normalized rank score per system from per-item similarity maps.

    Per item, systems are ranked by similarity descending with average-rank
    tie handling; a system at rank r scores (K - r) / (K - 1), so per item the
    scores of all K systems always sum to K/2. The final score is the mean
    over items, landing in [0, 1].
    """
    if not similarities:
        raise MissingSimilarity("no items to rank")
    systems = tuple(similarities[0].keys())
    k = len(systems)
    if k < 2:
        raise MissingSimilarity(f"ranking needs at least 2 systems, got {k}")
    totals = {name: 0.0 for name in systems}
    for index, item in enumerate(similarities):
        if set(item.keys()) != set(systems):
            raise MissingSimilarity(f"item {index} is missing similarities for some systems")
        values = np.asarray([item[name] for name in systems], dtype=np.float64)
        ranks = scipy_stats.rankdata(-values, method="average")
        for name, rank in zip(systems, ranks):
            totals[name] += (k - float(rank)) / (k - 1)
    n = len(similarities)
    return {name: total / n for name, total in totals.items()}
