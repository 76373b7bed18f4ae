"""Backend configuration and the protocols every adapter implements."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence, runtime_checkable

from ..bridge import ChatMessage, LlmParams
from ..canonical import sha256_hex
from ..evaluation.types import EmbeddingVector, LabelDistribution


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for one backend role.

    ``auth_env_var`` names an environment variable holding the credential;
    the credential itself never appears in config values.
    """

    kind: str
    base_url: str
    model_name: str = ""
    auth_env_var: str = ""
    timeout_s: float = 30.0
    retry_delays: tuple[float, ...] = (0.5, 2.0)
    extra_headers: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.base_url.startswith(("mock://", "http://", "https://")):
            raise ValueError(f"unsupported base_url scheme in {self.base_url!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if any(d < 0 for d in self.retry_delays):
            raise ValueError("retry_delays must be non-negative")

    @property
    def backend_id(self) -> str:
        """Stable identifier recorded in traces: kind plus model plus URL digest."""
        tag = self.model_name or "default"
        return f"{self.kind}:{tag}:{sha256_hex(self.base_url.encode('utf-8'))[:8]}"

    def auth_token(self) -> Optional[str]:
        if not self.auth_env_var:
            return None
        return os.environ.get(self.auth_env_var)


@dataclass(frozen=True)
class MusicPayload:
    """Raw music backend response before decoding: WAV bytes plus metadata."""

    audio_wav: bytes
    sample_rate: int
    duration_s: Optional[float] = None


@runtime_checkable
class CaptionerBackend(Protocol):
    backend_id: str

    def caption(self, image: bytes, image_format: str) -> str: ...


@runtime_checkable
class LlmBackend(Protocol):
    backend_id: str

    def chat(self, messages: Sequence[ChatMessage], params: LlmParams) -> str: ...


@runtime_checkable
class MusicBackend(Protocol):
    backend_id: str

    def generate(self, prompt: str, duration_s: float) -> MusicPayload: ...


@runtime_checkable
class EmbedderBackend(Protocol):
    backend_id: str

    def embed(self, modality: str, payload: bytes) -> EmbeddingVector: ...


@runtime_checkable
class ClassifierBackend(Protocol):
    backend_id: str

    def classify(self, audio_wav: bytes) -> LabelDistribution: ...


@dataclass
class BackendSuite:
    """The full set of backends a pipeline or eval run draws from."""

    captioner: CaptionerBackend
    llm: LlmBackend
    music: MusicBackend
    embedder: Optional[EmbedderBackend] = None
    classifier: Optional[ClassifierBackend] = None

    def require_embedder(self) -> EmbedderBackend:
        if self.embedder is None:
            raise ValueError("this operation needs an embedder backend")
        return self.embedder

    def require_classifier(self) -> ClassifierBackend:
        if self.classifier is None:
            raise ValueError("this operation needs a classifier backend")
        return self.classifier
