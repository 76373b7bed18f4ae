"""Manifest-driven metric computation over live backends or embedding files."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Optional, Protocol

from ..canonical import canonical_json_bytes, sha256_hex
from ..errors import DimensionMismatch, EvalError, MuseBridgeError
from .metrics import cosine_similarity, fit_gaussian, frechet_distance, ib_rank, kl_divergence
from .types import EmbeddingVector, EvalManifest, EvalReport, ManifestItem

if TYPE_CHECKING:
    from ..backends.base import BackendSuite

METRIC_ORDER = ("fad", "kl", "ib_rank")
_METRIC_ALIASES = {"fad": "fad", "kl": "kl", "ib_rank": "ib_rank", "ibrank": "ib_rank"}

KL_DIRECTION = "KL(reference || generated), natural log"
IB_RANK_FORMULA = "(K - rank) / (K - 1), ties averaged, mean over items"


def normalize_metrics(metrics: Iterable[str]) -> tuple[str, ...]:
    """Map aliases onto canonical names in a fixed report order."""
    requested = set()
    for name in metrics:
        canonical = _METRIC_ALIASES.get(name.strip().lower())
        if canonical is None:
            raise EvalError(f"unknown metric {name!r}; expected fad, kl, or ibrank")
        requested.add(canonical)
    if not requested:
        raise EvalError("no metrics requested")
    return tuple(m for m in METRIC_ORDER if m in requested)


def _media_bytes(item: ManifestItem) -> bytes:
    """Raw media payload for embedding: file bytes, or frame bytes for directories."""
    if item.media_path.is_dir():
        parts = [p.read_bytes() for p in sorted(item.media_path.iterdir()) if p.is_file()]
        if not parts:
            raise EvalError(f"media directory {item.media_path} holds no files")
        return b"".join(parts)
    return item.media_path.read_bytes()


class EmbeddingSource(Protocol):
    def media(self, index: int, item: ManifestItem) -> EmbeddingVector: ...

    def reference_audio(self, index: int, item: ManifestItem) -> EmbeddingVector: ...

    def generated_audio(self, index: int, item: ManifestItem, system: str) -> EmbeddingVector: ...

    def describe(self) -> dict: ...


class BackendEmbeddingSource:
    """Embeddings from the live /v1/embed backend."""

    def __init__(self, embedder) -> None:
        self._embedder = embedder

    def media(self, index: int, item: ManifestItem) -> EmbeddingVector:
        return self._embedder.embed(item.media_type, _media_bytes(item))

    def reference_audio(self, index: int, item: ManifestItem) -> EmbeddingVector:
        return self._embedder.embed("audio", item.reference_audio_path.read_bytes())

    def generated_audio(self, index: int, item: ManifestItem, system: str) -> EmbeddingVector:
        return self._embedder.embed("audio", item.generated_audio_paths[system].read_bytes())

    def describe(self) -> dict:
        return {"kind": "backend", "backend_id": self._embedder.backend_id}


def load_embedding_file(path: Path | str, expected_count: int) -> list[EmbeddingVector]:
    """Parse a precomputed embedding file.

    Format: header line ``dim=<d>``, then one whitespace-separated vector per
    line, aligned with manifest item order.
    """
    path = Path(path)
    if not path.is_file():
        raise EvalError(f"embedding file not found: {path}")
    lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]
    if not lines or not lines[0].strip().startswith("dim="):
        raise EvalError(f"{path}: first line must be a dim=<d> header")
    try:
        dim = int(lines[0].strip()[4:])
    except ValueError:
        raise EvalError(f"{path}: unparseable dim header {lines[0].strip()!r}") from None
    if dim < 1:
        raise EvalError(f"{path}: dim must be positive")
    vectors: list[EmbeddingVector] = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != dim:
            raise DimensionMismatch(
                f"{path}: line {line_no} has {len(parts)} values, header says dim={dim}"
            )
        try:
            vectors.append(EmbeddingVector(values=tuple(float(p) for p in parts)))
        except ValueError as exc:
            raise EvalError(f"{path}: line {line_no}: {exc}") from exc
    if len(vectors) != expected_count:
        raise EvalError(
            f"{path}: {len(vectors)} vectors for {expected_count} manifest items"
        )
    return vectors


class FileEmbeddingSource:
    """Precomputed embeddings from a directory of aligned files.

    Expected layout: ``media.emb``, ``reference.emb``, and one
    ``<system>.emb`` per manifest system.
    """

    def __init__(self, directory: Path | str, manifest: EvalManifest) -> None:
        directory = Path(directory)
        count = manifest.item_count
        self._media = load_embedding_file(directory / "media.emb", count)
        self._reference = load_embedding_file(directory / "reference.emb", count)
        self._generated = {
            system: load_embedding_file(directory / f"{system}.emb", count)
            for system in manifest.systems
        }
        digest_parts = [(directory / "media.emb").read_bytes(), (directory / "reference.emb").read_bytes()]
        digest_parts += [(directory / f"{s}.emb").read_bytes() for s in manifest.systems]
        self._digest = sha256_hex(b"".join(digest_parts))

    def media(self, index: int, item: ManifestItem) -> EmbeddingVector:
        return self._media[index]

    def reference_audio(self, index: int, item: ManifestItem) -> EmbeddingVector:
        return self._reference[index]

    def generated_audio(self, index: int, item: ManifestItem, system: str) -> EmbeddingVector:
        return self._generated[system][index]

    def describe(self) -> dict:
        return {"kind": "files", "digest": self._digest}


def _tag_item(exc: MuseBridgeError, item_id: str) -> None:
    if not hasattr(exc, "item_id"):
        exc.item_id = item_id


def run_eval(
    manifest: EvalManifest,
    metrics: Iterable[str],
    backends: Optional["BackendSuite"] = None,
    *,
    embeddings: Optional[EmbeddingSource] = None,
) -> EvalReport:
    """Compute the requested metrics for every system in the manifest.

    FAD fits one Gaussian to the pooled reference-audio embeddings and one to
    each system's pooled generated-audio embeddings. KL averages per-item
    divergences. IB Rank ranks systems per item by media-vs-audio cosine
    similarity.
    """
    selected = normalize_metrics(metrics)
    needs_embeddings = "fad" in selected or "ib_rank" in selected
    source: Optional[EmbeddingSource] = embeddings
    if needs_embeddings and source is None:
        if backends is None:
            raise EvalError("fad/ib_rank need an embedding source or backends")
        source = BackendEmbeddingSource(backends.require_embedder())
    classifier = None
    if "kl" in selected:
        if backends is None:
            raise EvalError("kl needs a classifier backend")
        classifier = backends.require_classifier()

    systems = manifest.systems
    values: dict[str, dict[str, float]] = {system: {} for system in systems}

    if needs_embeddings:
        assert source is not None
        reference_embeddings: list[EmbeddingVector] = []
        media_embeddings: list[EmbeddingVector] = []
        generated_embeddings: dict[str, list[EmbeddingVector]] = {s: [] for s in systems}
        for index, item in enumerate(manifest.items):
            try:
                if "ib_rank" in selected:
                    media_embeddings.append(source.media(index, item))
                reference_embeddings.append(source.reference_audio(index, item))
                for system in systems:
                    generated_embeddings[system].append(
                        source.generated_audio(index, item, system)
                    )
            except MuseBridgeError as exc:
                _tag_item(exc, item.id)
                raise
        if "fad" in selected:
            reference_stats = fit_gaussian(reference_embeddings)
            for system in systems:
                values[system]["fad"] = frechet_distance(
                    reference_stats, fit_gaussian(generated_embeddings[system])
                )
        if "ib_rank" in selected:
            similarities = []
            for index, item in enumerate(manifest.items):
                try:
                    similarities.append(
                        {
                            system: cosine_similarity(
                                media_embeddings[index], generated_embeddings[system][index]
                            )
                            for system in systems
                        }
                    )
                except MuseBridgeError as exc:
                    _tag_item(exc, item.id)
                    raise
            scores = ib_rank(similarities)
            for system in systems:
                values[system]["ib_rank"] = scores[system]

    if classifier is not None:
        totals = {system: 0.0 for system in systems}
        for item in manifest.items:
            try:
                reference_dist = classifier.classify(item.reference_audio_path.read_bytes())
                for system in systems:
                    generated_dist = classifier.classify(
                        item.generated_audio_paths[system].read_bytes()
                    )
                    totals[system] += kl_divergence(reference_dist, generated_dist)
            except MuseBridgeError as exc:
                _tag_item(exc, item.id)
                raise
        for system in systems:
            values[system]["kl"] = totals[system] / manifest.item_count

    config = {
        "manifest_digest": manifest.source_digest,
        "metrics": list(selected),
        "embedding_source": source.describe() if source is not None else None,
        "classifier": classifier.backend_id if classifier is not None else None,
    }
    metadata = {
        "kl_direction": KL_DIRECTION,
        "ib_rank_formula": IB_RANK_FORMULA,
    }
    if source is not None:
        metadata["embedding_source"] = source.describe()["kind"]
    return EvalReport(
        systems=values,
        metrics=selected,
        item_count=manifest.item_count,
        config_digest=sha256_hex(canonical_json_bytes(config)),
        metadata=metadata,
    )
