"""Domain error types shared across modules."""

from __future__ import annotations


class MuseBridgeError(Exception):
    """Base class for every domain error raised by this package."""


class DecodeError(MuseBridgeError):
    """Input media could not be decoded or enumerated into frames."""


class EmptyCaption(MuseBridgeError):
    """A captioner or LLM returned blank text.

    The pipeline aborts instead of feeding blank text downstream.
    """


class AudioDecodeError(MuseBridgeError):
    """Backend audio payload is not a decodable PCM WAV stream."""


class BackendError(MuseBridgeError):
    """A single backend call failed.

    ``kind`` is one of ``transport``, ``http_status``, ``malformed_response``,
    ``timeout``. For ``http_status`` the detail always contains the status
    code. ``retryable`` drives the retry policy in the client layer.
    """

    def __init__(self, kind: str, detail: str, *, retryable: bool) -> None:
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail
        self.retryable = retryable


class BackendUnavailable(MuseBridgeError):
    """A backend kept failing after all retries were spent."""

    def __init__(self, detail: str, last_error: BackendError | None = None) -> None:
        super().__init__(detail)
        self.last_error = last_error


# Evaluation-harness errors.


class EvalError(MuseBridgeError):
    """Base class for evaluation failures."""


class DimensionMismatch(EvalError):
    pass


class InsufficientSamples(EvalError):
    pass


class NotSymmetric(EvalError):
    pass


class LabelMismatch(EvalError):
    pass


class ZeroVector(EvalError):
    pass


class MissingSimilarity(EvalError):
    pass


class ManifestError(EvalError):
    """An evaluation manifest failed validation; message names the line or item."""
