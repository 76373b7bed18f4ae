"""Manifest loading and metric runs over mock backends and embedding files."""

from __future__ import annotations

import json

import pytest

from conftest import png_bytes
from musebridge.audio import encode_wav
from musebridge.backends.base import BackendSuite
from musebridge.backends.mock import MockClassifier, mock_sine_clip, mock_suite
from musebridge.canonical import sha256_hex
from musebridge.errors import BackendError, DimensionMismatch, EvalError, ManifestError
from musebridge.evaluation import (
    FileEmbeddingSource,
    emit_json,
    load_embedding_file,
    load_manifest,
    normalize_metrics,
    run_eval,
)

SYSTEMS = ("alpha", "beta")


def wav_for(tag: str) -> bytes:
    return encode_wav(mock_sine_clip(tag, 0.05))


def build_corpus(root, item_count=3, systems=SYSTEMS):
    """Write media, reference audio, per-system audio, and a JSONL manifest."""
    (root / "media").mkdir()
    (root / "ref").mkdir()
    for system in systems:
        (root / system).mkdir()
    lines = []
    for i in range(item_count):
        (root / "media" / f"item{i}.png").write_bytes(png_bytes(color=(i * 40, 10, 10)))
        (root / "ref" / f"item{i}.wav").write_bytes(wav_for(f"reference {i}"))
        for system in systems:
            (root / system / f"item{i}.wav").write_bytes(wav_for(f"{system} {i}"))
        lines.append(
            json.dumps(
                {
                    "id": f"item-{i}",
                    "media_path": f"media/item{i}.png",
                    "media_type": "image",
                    "reference_audio_path": f"ref/item{i}.wav",
                    "generated_audio_paths": {
                        system: f"{system}/item{i}.wav" for system in systems
                    },
                }
            )
        )
    manifest_path = root / "manifest.jsonl"
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest_path


@pytest.fixture
def corpus(tmp_path):
    return build_corpus(tmp_path)


class TestNormalizeMetrics:
    def test_aliases_and_order(self):
        assert normalize_metrics(["ibrank", "fad"]) == ("fad", "ib_rank")
        assert normalize_metrics(["KL"]) == ("kl",)
        assert normalize_metrics(["fad", "kl", "ib_rank"]) == ("fad", "kl", "ib_rank")

    def test_unknown_metric_rejected(self):
        with pytest.raises(EvalError, match="unknown metric"):
            normalize_metrics(["bleu"])

    def test_empty_rejected(self):
        with pytest.raises(EvalError, match="no metrics"):
            normalize_metrics([])


class TestLoadManifest:
    def test_happy_path(self, corpus):
        manifest = load_manifest(corpus)
        assert manifest.item_count == 3
        assert manifest.systems == SYSTEMS
        assert manifest.source_digest == sha256_hex(corpus.read_bytes())
        assert all(item.media_path.is_file() for item in manifest.items)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="not found"):
            load_manifest(tmp_path / "nope.jsonl")

    def test_invalid_json_names_line(self, corpus):
        text = corpus.read_text(encoding="utf-8").splitlines()
        text[1] = "{broken json"
        corpus.write_text("\n".join(text), encoding="utf-8")
        with pytest.raises(ManifestError, match="line 2: invalid JSON"):
            load_manifest(corpus)

    def test_missing_field_names_line(self, corpus):
        lines = corpus.read_text(encoding="utf-8").splitlines()
        raw = json.loads(lines[2])
        del raw["media_type"]
        lines[2] = json.dumps(raw)
        corpus.write_text("\n".join(lines), encoding="utf-8")
        with pytest.raises(ManifestError, match="line 3: missing field 'media_type'"):
            load_manifest(corpus)

    def test_duplicate_id_names_line(self, corpus):
        lines = corpus.read_text(encoding="utf-8").splitlines()
        raw = json.loads(lines[1])
        raw["id"] = "item-0"
        lines[1] = json.dumps(raw)
        corpus.write_text("\n".join(lines), encoding="utf-8")
        with pytest.raises(ManifestError, match="line 2: duplicate id 'item-0'"):
            load_manifest(corpus)

    def test_dangling_path_names_line(self, corpus):
        lines = corpus.read_text(encoding="utf-8").splitlines()
        raw = json.loads(lines[0])
        raw["reference_audio_path"] = "ref/ghost.wav"
        lines[0] = json.dumps(raw)
        corpus.write_text("\n".join(lines), encoding="utf-8")
        with pytest.raises(ManifestError, match="line 1: reference_audio_path does not exist"):
            load_manifest(corpus)

    def test_system_set_mismatch_names_line(self, corpus, tmp_path):
        extra = tmp_path / "gamma.wav"
        extra.write_bytes(wav_for("gamma"))
        lines = corpus.read_text(encoding="utf-8").splitlines()
        raw = json.loads(lines[2])
        raw["generated_audio_paths"]["gamma"] = "gamma.wav"
        lines[2] = json.dumps(raw)
        corpus.write_text("\n".join(lines), encoding="utf-8")
        with pytest.raises(ManifestError, match="line 3: system set"):
            load_manifest(corpus)

    def test_bad_media_type(self, corpus):
        lines = corpus.read_text(encoding="utf-8").splitlines()
        raw = json.loads(lines[0])
        raw["media_type"] = "sculpture"
        lines[0] = json.dumps(raw)
        corpus.write_text("\n".join(lines), encoding="utf-8")
        with pytest.raises(ManifestError, match="line 1: media_type"):
            load_manifest(corpus)

    def test_blank_lines_skipped(self, corpus):
        padded = "\n\n" + corpus.read_text(encoding="utf-8") + "\n\n"
        corpus.write_text(padded, encoding="utf-8")
        assert load_manifest(corpus).item_count == 3

    def test_empty_manifest_rejected(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("\n\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="empty"):
            load_manifest(empty)


class TestRunEvalWithBackends:
    def test_all_metrics_finite_and_bounded(self, corpus):
        report = run_eval(load_manifest(corpus), ["fad", "kl", "ibrank"], mock_suite())
        assert report.metrics == ("fad", "kl", "ib_rank")
        assert set(report.systems) == set(SYSTEMS)
        assert report.item_count == 3
        for values in report.systems.values():
            assert values["fad"] >= 0
            assert values["kl"] >= 0
            assert 0.0 <= values["ib_rank"] <= 1.0

    def test_ib_rank_scores_sum_to_half_k(self, corpus):
        report = run_eval(load_manifest(corpus), ["ibrank"], mock_suite())
        total = sum(values["ib_rank"] for values in report.systems.values())
        assert total == pytest.approx(len(SYSTEMS) / 2)

    def test_kl_only_needs_no_embedder(self, corpus):
        suite = mock_suite()
        kl_only = BackendSuite(
            captioner=suite.captioner,
            llm=suite.llm,
            music=suite.music,
            classifier=MockClassifier(),
        )
        report = run_eval(load_manifest(corpus), ["kl"], kl_only)
        assert report.metrics == ("kl",)
        for values in report.systems.values():
            assert set(values) == {"kl"}

    def test_fad_without_embedding_source_rejected(self, corpus):
        with pytest.raises(EvalError, match="embedding source"):
            run_eval(load_manifest(corpus), ["fad"])

    def test_kl_without_classifier_rejected(self, corpus):
        with pytest.raises(EvalError, match="classifier"):
            run_eval(load_manifest(corpus), ["kl"])

    def test_deterministic_reports(self, corpus):
        manifest = load_manifest(corpus)
        first = run_eval(manifest, ["fad", "kl", "ibrank"], mock_suite())
        second = run_eval(manifest, ["fad", "kl", "ibrank"], mock_suite())
        assert emit_json(first) == emit_json(second)

    def test_backend_failure_names_item(self, corpus):
        class FailingEmbedder:
            backend_id = "embedder:fail:00000000"

            def embed(self, modality, payload):
                raise BackendError("malformed_response", "bad vector", retryable=False)

        suite = mock_suite()
        broken = BackendSuite(
            captioner=suite.captioner,
            llm=suite.llm,
            music=suite.music,
            embedder=FailingEmbedder(),
        )
        with pytest.raises(BackendError) as excinfo:
            run_eval(load_manifest(corpus), ["fad"], broken)
        assert excinfo.value.item_id == "item-0"

    def test_video_items_with_frame_directories(self, tmp_path):
        (tmp_path / "ref").mkdir()
        for system in SYSTEMS:
            (tmp_path / system).mkdir()
        lines = []
        for clip in range(2):
            frames = tmp_path / "media" / f"clip{clip}"
            frames.mkdir(parents=True)
            for i in range(3):
                (frames / f"frame_{i:06d}.png").write_bytes(
                    png_bytes(color=(i, 99, clip))
                )
            (tmp_path / "ref" / f"clip{clip}.wav").write_bytes(wav_for(f"ref {clip}"))
            for system in SYSTEMS:
                (tmp_path / system / f"clip{clip}.wav").write_bytes(
                    wav_for(f"{system} clip {clip}")
                )
            lines.append(
                json.dumps(
                    {
                        "id": f"clip-{clip}",
                        "media_path": f"media/clip{clip}",
                        "media_type": "video",
                        "reference_audio_path": f"ref/clip{clip}.wav",
                        "generated_audio_paths": {
                            system: f"{system}/clip{clip}.wav" for system in SYSTEMS
                        },
                    }
                )
            )
        manifest_path = tmp_path / "manifest.jsonl"
        manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        report = run_eval(load_manifest(manifest_path), ["fad", "ibrank"], mock_suite())
        assert set(report.systems) == set(SYSTEMS)
        for values in report.systems.values():
            assert values["fad"] >= 0
            assert 0.0 <= values["ib_rank"] <= 1.0


def write_embeddings(directory, name: str, vectors) -> None:
    dim = len(vectors[0])
    lines = [f"dim={dim}"] + [" ".join(f"{v:.6f}" for v in vec) for vec in vectors]
    (directory / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


E1 = (1.0, 0.0, 0.0, 0.0)
E2 = (0.0, 1.0, 0.0, 0.0)


class TestEmbeddingFiles:
    def test_load_round_trip(self, tmp_path):
        write_embeddings(tmp_path, "vecs.emb", [E1, E2, E1])
        vectors = load_embedding_file(tmp_path / "vecs.emb", 3)
        assert [v.values for v in vectors] == [E1, E2, E1]

    def test_missing_header(self, tmp_path):
        (tmp_path / "vecs.emb").write_text("1 0 0 0\n", encoding="utf-8")
        with pytest.raises(EvalError, match="dim=<d> header"):
            load_embedding_file(tmp_path / "vecs.emb", 1)

    def test_unparseable_header(self, tmp_path):
        (tmp_path / "vecs.emb").write_text("dim=four\n1 0 0 0\n", encoding="utf-8")
        with pytest.raises(EvalError, match="unparseable dim"):
            load_embedding_file(tmp_path / "vecs.emb", 1)

    def test_width_mismatch_names_line(self, tmp_path):
        (tmp_path / "vecs.emb").write_text("dim=4\n1 0 0 0\n1 0 0\n", encoding="utf-8")
        with pytest.raises(DimensionMismatch, match="line 3"):
            load_embedding_file(tmp_path / "vecs.emb", 2)

    def test_count_mismatch(self, tmp_path):
        write_embeddings(tmp_path, "vecs.emb", [E1, E2])
        with pytest.raises(EvalError, match="2 vectors for 3"):
            load_embedding_file(tmp_path / "vecs.emb", 3)

    def test_non_numeric_value_names_line(self, tmp_path):
        (tmp_path / "vecs.emb").write_text("dim=2\n1 0\n1 oops\n", encoding="utf-8")
        with pytest.raises(EvalError, match="line 3"):
            load_embedding_file(tmp_path / "vecs.emb", 2)

    def test_file_not_found(self, tmp_path):
        with pytest.raises(EvalError, match="not found"):
            load_embedding_file(tmp_path / "ghost.emb", 1)


class TestFileEmbeddingSource:
    def build(self, tmp_path):
        manifest_path = build_corpus(tmp_path)
        manifest = load_manifest(manifest_path)
        emb_dir = tmp_path / "emb"
        emb_dir.mkdir()
        count = manifest.item_count
        write_embeddings(emb_dir, "media.emb", [E1] * count)
        write_embeddings(emb_dir, "reference.emb", [E1] * count)
        write_embeddings(emb_dir, "alpha.emb", [E1] * count)  # matches media exactly
        write_embeddings(emb_dir, "beta.emb", [E2] * count)  # orthogonal to media
        return manifest, emb_dir

    def test_exact_fad_and_rank_from_files(self, tmp_path):
        manifest, emb_dir = self.build(tmp_path)
        source = FileEmbeddingSource(emb_dir, manifest)
        report = run_eval(manifest, ["fad", "ibrank"], embeddings=source)
        # alpha embeddings equal the reference set exactly; beta sits one
        # unit away on an orthogonal axis with zero covariance everywhere
        assert report.systems["alpha"]["fad"] == pytest.approx(0.0, abs=1e-9)
        assert report.systems["beta"]["fad"] == pytest.approx(2.0, abs=1e-9)
        assert report.systems["alpha"]["ib_rank"] == pytest.approx(1.0)
        assert report.systems["beta"]["ib_rank"] == pytest.approx(0.0)

    def test_describe_carries_file_digest(self, tmp_path):
        manifest, emb_dir = self.build(tmp_path)
        source = FileEmbeddingSource(emb_dir, manifest)
        described = source.describe()
        assert described["kind"] == "files"
        assert len(described["digest"]) == 64

    def test_missing_system_file_rejected(self, tmp_path):
        manifest, emb_dir = self.build(tmp_path)
        (emb_dir / "beta.emb").unlink()
        with pytest.raises(EvalError, match="beta.emb"):
            FileEmbeddingSource(emb_dir, manifest)

    def test_config_digest_distinguishes_sources(self, tmp_path):
        manifest, emb_dir = self.build(tmp_path)
        from_files = run_eval(
            manifest, ["fad"], embeddings=FileEmbeddingSource(emb_dir, manifest)
        )
        from_backend = run_eval(manifest, ["fad"], mock_suite())
        assert from_files.config_digest != from_backend.config_digest
        assert from_files.metadata["embedding_source"] == "files"
        assert from_backend.metadata["embedding_source"] == "backend"
