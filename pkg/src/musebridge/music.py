"""Music generation wrapper: calls the backend and normalizes its audio."""

from __future__ import annotations

from typing import TYPE_CHECKING

from .audio import AudioClip, decode_wav
from .bridge import MusicPrompt
from .errors import BackendError

if TYPE_CHECKING:
    from .backends.base import MusicBackend, MusicPayload

DURATION_TOLERANCE = 0.10


def decode_music_payload(payload: "MusicPayload", requested_duration_s: float) -> AudioClip:
    """Decode a backend music payload into a validated PCM-16 clip.

    The payload must be internally consistent: the WAV stream must decode at
    the declared sample rate, and when the backend reports the duration it
    honored, both the report and the decoded clip must sit within 10% of the
    request. Violations are malformed responses, never retried.
    """
    clip = decode_wav(payload.audio_wav)
    if clip.sample_rate != payload.sample_rate:
        raise BackendError(
            "malformed_response",
            f"payload sample_rate {payload.sample_rate} but WAV decodes at {clip.sample_rate}",
            retryable=False,
        )
    reported = payload.duration_s
    if reported is not None:
        if reported <= 0:
            raise BackendError(
                "malformed_response", f"reported duration {reported}s is not positive",
                retryable=False,
            )
        if abs(reported - requested_duration_s) > DURATION_TOLERANCE * requested_duration_s:
            raise BackendError(
                "malformed_response",
                f"reported duration {reported:.3f}s deviates from requested"
                f" {requested_duration_s:.3f}s by more than 10%",
                retryable=False,
            )
        if abs(clip.duration - reported) > DURATION_TOLERANCE * reported:
            raise BackendError(
                "malformed_response",
                f"decoded duration {clip.duration:.3f}s deviates from reported {reported:.3f}s",
                retryable=False,
            )
    return clip


def generate_music(prompt: MusicPrompt, duration_s: float, backend: "MusicBackend") -> AudioClip:
    """One music-backend call returning a validated clip."""
    if not prompt.text.strip():
        raise ValueError("prompt text must be non-blank")
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    return decode_music_payload(backend.generate(prompt.text, duration_s), duration_s)
