"""Numeric carriers and manifest/report records for the evaluation harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from ..errors import ManifestError

DISTRIBUTION_SUM_TOL = 1e-6


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-dimension real vector in some joint embedding space."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("embedding must be non-empty")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class GaussianStats:
    """Mean and covariance fit to an embedding set."""

    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int

    def __post_init__(self) -> None:
        if self.mean.ndim != 1:
            raise ValueError("mean must be a vector")
        if self.covariance.shape != (self.mean.size, self.mean.size):
            raise ValueError("covariance shape must match mean dimension")

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    def validate(self) -> None:
        """Full invariant check: symmetry within 1e-12, eigenvalues >= -1e-9."""
        if float(np.max(np.abs(self.covariance - self.covariance.T))) > 1e-12:
            raise ValueError("covariance not symmetric within 1e-12")
        eigenvalues = np.linalg.eigvalsh(self.covariance)
        if float(eigenvalues.min()) < -1e-9:
            raise ValueError("covariance has eigenvalues below -1e-9")


@dataclass(frozen=True)
class LabelDistribution:
    """Probability distribution over a fixed label vocabulary."""

    probs: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.probs) != len(self.labels):
            raise ValueError("probs and labels must have equal length")
        if not self.probs:
            raise ValueError("distribution must be non-empty")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        total = sum(self.probs)
        if abs(total - 1.0) > DISTRIBUTION_SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, expected 1 within {DISTRIBUTION_SUM_TOL}")


@dataclass(frozen=True)
class ManifestItem:
    id: str
    media_path: Path
    media_type: str
    reference_audio_path: Path
    generated_audio_paths: Mapping[str, Path]


@dataclass(frozen=True)
class EvalManifest:
    items: tuple[ManifestItem, ...]
    source_digest: str

    def __post_init__(self) -> None:
        if not self.items:
            raise ManifestError("manifest holds no items")

    @property
    def systems(self) -> tuple[str, ...]:
        return tuple(self.items[0].generated_audio_paths.keys())

    @property
    def item_count(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class EvalReport:
    """Per-system metric values plus the configuration they were computed under."""

    systems: Mapping[str, Mapping[str, float]]
    metrics: tuple[str, ...]
    item_count: int
    config_digest: str
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, values in self.systems.items():
            if set(values) != set(self.metrics):
                raise ValueError(f"system {name!r} metrics do not match report metrics")
            fad = values.get("fad")
            if fad is not None and fad < 0:
                raise ValueError("fad must be non-negative")
            kl = values.get("kl")
            if kl is not None and kl < 0:
                raise ValueError("kl must be non-negative")
            rank = values.get("ib_rank")
            if rank is not None and not (0.0 <= rank <= 1.0):
                raise ValueError("ib_rank must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "schema": "eval-report/v1",
            "config_digest": self.config_digest,
            "item_count": self.item_count,
            "metrics": list(self.metrics),
            "metadata": dict(self.metadata),
            "systems": {name: dict(values) for name, values in self.systems.items()},
        }
