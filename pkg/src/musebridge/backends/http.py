"""HTTP clients for the five wire routes, with a shared retry policy.

Every route is a POST with a UTF-8 JSON body. Responses are validated
against their schema before anything escapes this module; schema
violations are ``malformed_response`` and are never retried.
"""

from __future__ import annotations

import base64
import binascii
import time
from typing import Any, Optional, Sequence

import httpx

from ..bridge import ChatMessage, LlmParams
from ..errors import BackendError, BackendUnavailable
from ..evaluation.types import EmbeddingVector, LabelDistribution
from .base import BackendConfig, MusicPayload

RETRYABLE_STATUS = (408, 429)


def _new_client(config: BackendConfig, transport: Optional[httpx.BaseTransport]) -> httpx.Client:
    headers = dict(config.extra_headers)
    token = config.auth_token()
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return httpx.Client(
        base_url=config.base_url,
        headers=headers,
        timeout=config.timeout_s,
        transport=transport,
    )


class _HttpBackend:
    """Shared request plumbing: POST, retry loop, JSON validation."""

    def __init__(
        self,
        config: BackendConfig,
        transport: Optional[httpx.BaseTransport] = None,
    ) -> None:
        self.config = config
        self.backend_id = config.backend_id
        self._client = _new_client(config, transport)

    def close(self) -> None:
        self._client.close()

    def _attempt(self, path: str, body: dict[str, Any]) -> dict[str, Any]:
        try:
            response = self._client.post(path, json=body)
        except httpx.TimeoutException as exc:
            raise BackendError("timeout", f"{path}: {exc}", retryable=True) from exc
        except httpx.HTTPError as exc:
            raise BackendError("transport", f"{path}: {exc}", retryable=True) from exc
        status = response.status_code
        if status != 200:
            retryable = status >= 500 or status in RETRYABLE_STATUS
            raise BackendError(
                "http_status", f"{path} returned status {status}", retryable=retryable
            )
        try:
            payload = response.json()
        except ValueError as exc:
            raise BackendError(
                "malformed_response", f"{path}: body is not JSON", retryable=False
            ) from exc
        if not isinstance(payload, dict):
            raise BackendError(
                "malformed_response", f"{path}: expected a JSON object", retryable=False
            )
        return payload

    def _post(self, path: str, body: dict[str, Any]) -> dict[str, Any]:
        """POST with up to len(retry_delays) retries on retryable failures."""
        delays = self.config.retry_delays
        last: Optional[BackendError] = None
        for attempt in range(len(delays) + 1):
            try:
                return self._attempt(path, body)
            except BackendError as exc:
                if not exc.retryable:
                    raise
                last = exc
                if attempt < len(delays):
                    time.sleep(delays[attempt])
        raise BackendUnavailable(
            f"{self.backend_id}: gave up after {len(delays) + 1} attempts ({last.detail})",
            last_error=last,
        )


def _require_str(payload: dict[str, Any], field: str, path: str) -> str:
    value = payload.get(field)
    if not isinstance(value, str):
        raise BackendError(
            "malformed_response", f"{path}: missing or non-string {field!r}", retryable=False
        )
    return value


def _decode_b64(value: str, field: str, path: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise BackendError(
            "malformed_response", f"{path}: {field!r} is not base64", retryable=False
        ) from exc


class HttpCaptioner(_HttpBackend):
    def caption(self, image: bytes, image_format: str) -> str:
        if not image:
            raise ValueError("image payload must be non-empty")
        payload = self._post(
            "/v1/caption",
            {"image": base64.b64encode(image).decode("ascii"), "format": image_format},
        )
        return _require_str(payload, "caption", "/v1/caption")


class HttpLlm(_HttpBackend):
    def chat(self, messages: Sequence[ChatMessage], params: LlmParams) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        if messages[0].role != "system":
            raise ValueError("first message must have role=system")
        payload = self._post(
            "/v1/chat",
            {
                "messages": [{"role": m.role, "content": m.content} for m in messages],
                "temperature": params.temperature,
                "max_tokens": params.max_tokens,
            },
        )
        return _require_str(payload, "content", "/v1/chat")


class HttpMusicGenerator(_HttpBackend):
    def generate(self, prompt: str, duration_s: float) -> MusicPayload:
        if not prompt.strip():
            raise ValueError("prompt must be non-blank")
        if duration_s <= 0:
            raise ValueError("duration_s must be positive")
        payload = self._post("/v1/music", {"prompt": prompt, "duration_s": duration_s})
        audio = _decode_b64(_require_str(payload, "audio", "/v1/music"), "audio", "/v1/music")
        sample_rate = payload.get("sample_rate")
        if not isinstance(sample_rate, int) or sample_rate <= 0:
            raise BackendError(
                "malformed_response", "/v1/music: bad sample_rate", retryable=False
            )
        duration = payload.get("duration_s")
        if duration is not None and not isinstance(duration, (int, float)):
            raise BackendError(
                "malformed_response", "/v1/music: bad duration_s", retryable=False
            )
        return MusicPayload(
            audio_wav=audio,
            sample_rate=sample_rate,
            duration_s=float(duration) if duration is not None else None,
        )


class HttpEmbedder(_HttpBackend):
    def embed(self, modality: str, payload: bytes) -> EmbeddingVector:
        if not payload:
            raise ValueError("payload must be non-empty")
        body = {
            "modality": modality,
            "payload": base64.b64encode(payload).decode("ascii"),
        }
        response = self._post("/v1/embed", body)
        vector = response.get("vector")
        dim = response.get("dim")
        if not isinstance(vector, list) or not all(
            isinstance(x, (int, float)) for x in vector
        ):
            raise BackendError(
                "malformed_response", "/v1/embed: bad vector field", retryable=False
            )
        if not isinstance(dim, int) or dim != len(vector):
            raise BackendError(
                "malformed_response",
                f"/v1/embed: dim {dim!r} does not match vector length {len(vector)}",
                retryable=False,
            )
        return EmbeddingVector(values=tuple(float(x) for x in vector))


class HttpClassifier(_HttpBackend):
    def classify(self, audio_wav: bytes) -> LabelDistribution:
        if not audio_wav:
            raise ValueError("audio payload must be non-empty")
        body = {"audio": base64.b64encode(audio_wav).decode("ascii")}
        response = self._post("/v1/labels", body)
        distribution = response.get("distribution")
        labels = response.get("labels")
        if not isinstance(distribution, list) or not all(
            isinstance(x, (int, float)) for x in distribution
        ):
            raise BackendError(
                "malformed_response", "/v1/labels: bad distribution field", retryable=False
            )
        if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
            raise BackendError(
                "malformed_response", "/v1/labels: bad labels field", retryable=False
            )
        if len(labels) != len(distribution):
            raise BackendError(
                "malformed_response",
                "/v1/labels: labels and distribution lengths differ",
                retryable=False,
            )
        total = float(sum(distribution))
        if abs(total - 1.0) > 1e-6 or any(x < 0 for x in distribution):
            raise BackendError(
                "malformed_response",
                f"/v1/labels: distribution sums to {total}, expected 1",
                retryable=False,
            )
        return LabelDistribution(
            probs=tuple(float(x) for x in distribution), labels=tuple(labels)
        )
