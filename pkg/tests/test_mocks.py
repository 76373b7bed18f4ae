"""Deterministic mock backends: exact output formats and purity.

Also pins the HTTP mock server to the in-process mocks, so a suite built
over the wire is indistinguishable from one built in-process.
"""

from __future__ import annotations

import base64
import hashlib

import numpy as np
import pytest
from fastapi.testclient import TestClient
from hypothesis import given, settings
from hypothesis import strategies as st

from musebridge.audio import decode_wav
from musebridge.backends.mock import (
    MOCK_EMBED_DIM,
    MOCK_GENRES,
    MOCK_SAMPLE_RATE,
    MockCaptioner,
    MockClassifier,
    MockEmbedder,
    MockLlm,
    MockMusicGenerator,
    mock_sine_frequency,
    mock_suite,
)
from musebridge.backends.server import create_mock_app
from musebridge.bridge import ChatMessage, LlmParams
from musebridge.canonical import canonical_json, hex8

payload_bytes = st.binary(min_size=1, max_size=64)


class TestMockCaptioner:
    def test_exact_format(self):
        image = b"\x89PNG fake"
        expected = "mock caption " + hashlib.sha256(image).hexdigest()[:8]
        assert MockCaptioner().caption(image, "png") == expected

    def test_format_argument_ignored(self):
        image = b"pixels"
        captioner = MockCaptioner()
        assert captioner.caption(image, "png") == captioner.caption(image, "jpeg")

    @given(payload_bytes)
    @settings(max_examples=100, deadline=None)
    def test_pure(self, image):
        captioner = MockCaptioner()
        assert captioner.caption(image, "png") == captioner.caption(image, "png")

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            MockCaptioner().caption(b"", "png")


class TestMockLlm:
    def test_exact_format(self):
        messages = [ChatMessage("system", "s"), ChatMessage("user", "u")]
        wire = canonical_json(
            [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}]
        )
        expected = "mock: " + hex8(hashlib.sha256(wire.encode("utf-8")).hexdigest())
        assert MockLlm().chat(messages, LlmParams()) == expected

    def test_params_do_not_affect_reply(self):
        messages = [ChatMessage("system", "s"), ChatMessage("user", "u")]
        llm = MockLlm()
        assert llm.chat(messages, LlmParams(0.1, 16)) == llm.chat(messages, LlmParams(0.9, 512))

    def test_content_changes_reply(self):
        llm = MockLlm()
        a = llm.chat([ChatMessage("system", "s"), ChatMessage("user", "one")], LlmParams())
        b = llm.chat([ChatMessage("system", "s"), ChatMessage("user", "two")], LlmParams())
        assert a != b

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            MockLlm().chat([], LlmParams())


class TestMockMusic:
    def test_sine_frequency_rule(self):
        prompt = "upbeat jazz"
        digest = int(hashlib.sha256(prompt.encode("utf-8")).hexdigest(), 16)
        assert mock_sine_frequency(prompt) == 220 + digest % 440

    def test_frequency_via_fft_peak(self):
        prompt = "calm piano"
        payload = MockMusicGenerator().generate(prompt, 2.0)
        clip = decode_wav(payload.audio_wav)
        spectrum = np.abs(np.fft.rfft(clip.samples.astype(np.float64)))
        peak_hz = np.argmax(spectrum) * clip.sample_rate / clip.frame_count
        assert peak_hz == pytest.approx(mock_sine_frequency(prompt), abs=0.5)

    def test_payload_metadata(self):
        payload = MockMusicGenerator().generate("prompt", 1.5)
        assert payload.sample_rate == MOCK_SAMPLE_RATE
        assert payload.duration_s == pytest.approx(1.5)
        clip = decode_wav(payload.audio_wav)
        assert clip.channels == 1
        assert clip.frame_count == 48000

    def test_amplitude_bounded_near_half_scale(self):
        clip = decode_wav(MockMusicGenerator().generate("loudness check", 1.0).audio_wav)
        peak = int(np.abs(clip.samples.astype(np.int32)).max())
        assert peak <= 16384
        assert peak >= 16000  # a 1 s sine always comes close to its amplitude

    @given(st.text(min_size=1, max_size=40).filter(lambda t: t.strip()))
    @settings(max_examples=50, deadline=None)
    def test_pure(self, prompt):
        generator = MockMusicGenerator()
        first = generator.generate(prompt, 0.25)
        second = generator.generate(prompt, 0.25)
        assert first.audio_wav == second.audio_wav

    def test_blank_prompt_rejected(self):
        with pytest.raises(ValueError):
            MockMusicGenerator().generate("   ", 1.0)

    def test_nonpositive_duration_rejected(self):
        with pytest.raises(ValueError):
            MockMusicGenerator().generate("p", 0)


class TestMockEmbedder:
    def test_dim_and_unit_norm(self):
        vector = MockEmbedder().embed("audio", b"wav bytes")
        assert len(vector.values) == MOCK_EMBED_DIM
        assert np.linalg.norm(vector.values) == pytest.approx(1.0, abs=1e-9)

    def test_modality_does_not_change_vector(self):
        embedder = MockEmbedder()
        assert embedder.embed("audio", b"same") == embedder.embed("image", b"same")

    def test_payload_changes_vector(self):
        embedder = MockEmbedder()
        assert embedder.embed("audio", b"one") != embedder.embed("audio", b"two")

    @given(payload_bytes)
    @settings(max_examples=100, deadline=None)
    def test_pure(self, payload):
        embedder = MockEmbedder()
        assert embedder.embed("video", payload) == embedder.embed("video", payload)

    def test_unknown_modality_rejected(self):
        with pytest.raises(ValueError):
            MockEmbedder().embed("text", b"x")


class TestMockClassifier:
    def test_vocabulary_and_simplex(self):
        dist = MockClassifier().classify(b"wav")
        assert dist.labels == MOCK_GENRES
        assert list(dist.labels) == sorted(dist.labels)
        assert len(dist.probs) == 10
        assert sum(dist.probs) == pytest.approx(1.0, abs=1e-6)
        assert all(p > 0 for p in dist.probs)

    @given(payload_bytes)
    @settings(max_examples=100, deadline=None)
    def test_pure(self, audio):
        classifier = MockClassifier()
        assert classifier.classify(audio) == classifier.classify(audio)


class TestMockSuite:
    def test_all_roles_present(self):
        suite = mock_suite()
        assert suite.require_embedder() is suite.embedder
        assert suite.require_classifier() is suite.classifier
        assert suite.captioner.backend_id.startswith("captioner:")


@pytest.fixture(scope="module")
def client():
    with TestClient(create_mock_app()) as test_client:
        yield test_client


class TestServerParity:
    """The HTTP mock server must return exactly what the in-process mocks do."""

    def test_caption_route(self, client):
        image = b"route parity image"
        response = client.post(
            "/v1/caption",
            json={"image": base64.b64encode(image).decode("ascii"), "format": "png"},
        )
        assert response.status_code == 200
        assert response.json()["caption"] == MockCaptioner().caption(image, "png")

    def test_chat_route(self, client):
        messages = [ChatMessage("system", "s"), ChatMessage("user", "u")]
        response = client.post(
            "/v1/chat",
            json={
                "messages": [{"role": m.role, "content": m.content} for m in messages],
                "temperature": 0.7,
                "max_tokens": 256,
            },
        )
        assert response.status_code == 200
        assert response.json()["content"] == MockLlm().chat(messages, LlmParams())

    def test_music_route(self, client):
        response = client.post("/v1/music", json={"prompt": "parity", "duration_s": 0.25})
        assert response.status_code == 200
        body = response.json()
        expected = MockMusicGenerator().generate("parity", 0.25)
        assert base64.b64decode(body["audio"]) == expected.audio_wav
        assert body["sample_rate"] == MOCK_SAMPLE_RATE

    def test_embed_route(self, client):
        payload = b"embedding parity"
        response = client.post(
            "/v1/embed",
            json={"modality": "audio", "payload": base64.b64encode(payload).decode("ascii")},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["dim"] == MOCK_EMBED_DIM
        expected = MockEmbedder().embed("audio", payload)
        assert body["vector"] == pytest.approx(list(expected.values))

    def test_labels_route(self, client):
        audio = MockMusicGenerator().generate("labels parity", 0.1).audio_wav
        response = client.post(
            "/v1/labels", json={"audio": base64.b64encode(audio).decode("ascii")}
        )
        assert response.status_code == 200
        body = response.json()
        expected = MockClassifier().classify(audio)
        assert body["labels"] == list(expected.labels)
        assert body["distribution"] == pytest.approx(list(expected.probs))

    def test_bad_base64_is_400(self, client):
        response = client.post("/v1/caption", json={"image": "!!!", "format": "png"})
        assert response.status_code == 400

    def test_blank_prompt_is_400(self, client):
        response = client.post("/v1/music", json={"prompt": "  ", "duration_s": 1.0})
        assert response.status_code == 400

    def test_empty_messages_is_400(self, client):
        response = client.post(
            "/v1/chat", json={"messages": [], "temperature": 0.7, "max_tokens": 256}
        )
        assert response.status_code == 400

    def test_bad_modality_is_400(self, client):
        response = client.post(
            "/v1/embed",
            json={"modality": "text", "payload": base64.b64encode(b"x").decode("ascii")},
        )
        assert response.status_code == 400
