"""PCM-16 WAV carrier.

Everything downstream (hashing, persistence, metrics, playback) sees one
canonical audio form: RIFF/WAVE, 16-bit PCM, mono or stereo.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass

import numpy as np

from .errors import AudioDecodeError

ALLOWED_SAMPLE_RATES = (16000, 22050, 24000, 32000, 44100, 48000)


@dataclass(frozen=True)
class AudioClip:
    """Decoded PCM audio: int16 samples, shape (frames,) mono or (frames, 2) stereo."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        if self.sample_rate not in ALLOWED_SAMPLE_RATES:
            raise AudioDecodeError(f"unsupported sample rate {self.sample_rate}")
        if self.samples.dtype != np.int16:
            raise AudioDecodeError("samples must be int16 PCM")
        if self.samples.ndim not in (1, 2) or (self.samples.ndim == 2 and self.samples.shape[1] != 2):
            raise AudioDecodeError("samples must be (frames,) or (frames, 2)")
        if self.frame_count == 0:
            raise AudioDecodeError("audio clip is empty")

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 1 else 2

    @property
    def frame_count(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return self.frame_count / self.sample_rate


def decode_wav(data: bytes) -> AudioClip:
    """Decode RIFF/WAVE PCM-16 bytes, raising AudioDecodeError on anything else."""
    try:
        with wave.open(io.BytesIO(data)) as wav:
            channels = wav.getnchannels()
            sample_width = wav.getsampwidth()
            sample_rate = wav.getframerate()
            frame_count = wav.getnframes()
            payload = wav.readframes(frame_count)
    except (wave.Error, EOFError) as exc:
        raise AudioDecodeError(f"invalid WAV payload: {exc}") from exc
    if sample_width != 2:
        raise AudioDecodeError(f"expected 16-bit PCM, got sample width {sample_width}")
    if channels not in (1, 2):
        raise AudioDecodeError(f"expected mono or stereo, got {channels} channels")
    if len(payload) != frame_count * channels * 2:
        raise AudioDecodeError("WAV data chunk is truncated")
    samples = np.frombuffer(payload, dtype="<i2").astype(np.int16, copy=False)
    if channels == 2:
        samples = samples.reshape(-1, 2)
    return AudioClip(samples=samples, sample_rate=sample_rate)


def encode_wav(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(clip.channels)
        wav.setsampwidth(2)
        wav.setframerate(clip.sample_rate)
        wav.writeframes(clip.samples.astype("<i2").tobytes())
    return buf.getvalue()
