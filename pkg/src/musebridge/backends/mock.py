"""Deterministic in-process backends.

Every mock is a pure function of its request bytes: outputs derive from
SHA-256 digests, never from clocks or shared RNG state, so repeated calls
with the same payload give byte-identical results.
"""

from __future__ import annotations

import hashlib
import math
from typing import Optional, Sequence

import numpy as np

from ..audio import AudioClip, encode_wav
from ..bridge import ChatMessage, LlmParams, message_digest_payload
from ..canonical import canonical_json, hex8
from ..evaluation.types import EmbeddingVector, LabelDistribution
from .base import BackendConfig, MusicPayload

MOCK_SAMPLE_RATE = 32000
MOCK_EMBED_DIM = 16
MOCK_BASE_FREQUENCY = 220
MOCK_FREQUENCY_SPAN = 440

MOCK_GENRES = (
    "ambient",
    "classical",
    "country",
    "electronic",
    "folk",
    "hip-hop",
    "jazz",
    "metal",
    "pop",
    "rock",
)


def _default_config(kind: str) -> BackendConfig:
    return BackendConfig(kind=kind, base_url="mock://local")


def _hash_floats(seed: bytes, count: int) -> list[float]:
    """Uniform floats in [0, 1) from a SHA-256 counter stream over ``seed``.

    Each counter block yields four 8-byte big-endian integers divided by
    2**64; no RNG state, so the stream is a pure function of the seed.
    """
    out: list[float] = []
    counter = 0
    while len(out) < count:
        block = hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
        for i in range(0, 32, 8):
            out.append(int.from_bytes(block[i : i + 8], "big") / 2**64)
            if len(out) == count:
                break
        counter += 1
    return out


class MockCaptioner:
    """Caption = "mock caption " plus the first 8 hex of the image digest."""

    def __init__(self, config: Optional[BackendConfig] = None) -> None:
        self.backend_id = (config or _default_config("captioner")).backend_id

    def caption(self, image: bytes, image_format: str) -> str:
        if not image:
            raise ValueError("image payload must be non-empty")
        return "mock caption " + hex8(hashlib.sha256(image).hexdigest())


class MockLlm:
    """Reply = "mock: " plus the first 8 hex of the canonical message digest."""

    def __init__(self, config: Optional[BackendConfig] = None) -> None:
        self.backend_id = (config or _default_config("llm")).backend_id

    def chat(self, messages: Sequence[ChatMessage], params: LlmParams) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        serialized = canonical_json(message_digest_payload(messages))
        return "mock: " + hex8(hashlib.sha256(serialized.encode("utf-8")).hexdigest())


def mock_sine_frequency(prompt: str) -> int:
    """220 + (sha256(prompt) mod 440) Hz, the mock generator's pitch rule."""
    digest = int(hashlib.sha256(prompt.encode("utf-8")).hexdigest(), 16)
    return MOCK_BASE_FREQUENCY + digest % MOCK_FREQUENCY_SPAN


def mock_sine_clip(prompt: str, duration_s: float) -> AudioClip:
    frequency = mock_sine_frequency(prompt)
    frame_count = max(1, round(duration_s * MOCK_SAMPLE_RATE))
    t = np.arange(frame_count, dtype=np.float64) / MOCK_SAMPLE_RATE
    wave = 0.5 * np.sin(2.0 * math.pi * frequency * t)
    samples = np.asarray(np.round(wave * 32767.0), dtype=np.int16)
    return AudioClip(samples=samples, sample_rate=MOCK_SAMPLE_RATE)


class MockMusicGenerator:
    """Mono sine wave pitched by the prompt digest at 32 kHz."""

    def __init__(self, config: Optional[BackendConfig] = None) -> None:
        self.backend_id = (config or _default_config("music")).backend_id

    def generate(self, prompt: str, duration_s: float) -> MusicPayload:
        if not prompt.strip():
            raise ValueError("prompt must be non-blank")
        if duration_s <= 0:
            raise ValueError("duration_s must be positive")
        clip = mock_sine_clip(prompt, duration_s)
        return MusicPayload(
            audio_wav=encode_wav(clip),
            sample_rate=MOCK_SAMPLE_RATE,
            duration_s=clip.duration,
        )


class MockEmbedder:
    """16-dim unit vector from a hash stream seeded by sha256(payload)."""

    def __init__(self, config: Optional[BackendConfig] = None) -> None:
        self.backend_id = (config or _default_config("embedder")).backend_id

    def embed(self, modality: str, payload: bytes) -> EmbeddingVector:
        if not payload:
            raise ValueError("payload must be non-empty")
        if modality not in ("image", "video", "audio"):
            raise ValueError(f"unknown modality {modality!r}")
        seed = hashlib.sha256(payload).digest()
        raw = np.asarray(_hash_floats(seed, MOCK_EMBED_DIM)) * 2.0 - 1.0
        norm = float(np.linalg.norm(raw))
        if norm == 0.0:
            raw = np.zeros(MOCK_EMBED_DIM)
            raw[0] = 1.0
            norm = 1.0
        return EmbeddingVector(values=tuple(float(x) for x in raw / norm))


class MockClassifier:
    """Softmax over hash-seeded logits for a fixed 10-genre vocabulary."""

    def __init__(self, config: Optional[BackendConfig] = None) -> None:
        self.backend_id = (config or _default_config("classifier")).backend_id

    def classify(self, audio_wav: bytes) -> LabelDistribution:
        if not audio_wav:
            raise ValueError("audio payload must be non-empty")
        seed = hashlib.sha256(audio_wav).digest()
        logits = (np.asarray(_hash_floats(seed, len(MOCK_GENRES))) * 2.0 - 1.0) * 3.0
        exp = np.exp(logits - logits.max())
        probs = exp / exp.sum()
        return LabelDistribution(
            probs=tuple(float(p) for p in probs),
            labels=MOCK_GENRES,
        )


def mock_suite() -> "BackendSuite":
    """A complete suite of the five mocks with stable backend ids."""
    from .base import BackendSuite

    return BackendSuite(
        captioner=MockCaptioner(),
        llm=MockLlm(),
        music=MockMusicGenerator(),
        embedder=MockEmbedder(),
        classifier=MockClassifier(),
    )
