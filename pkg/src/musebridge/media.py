"""Media inputs, captions, and frame sources.

Video decoding is delegated: a frame source either reads pre-extracted
``frame_<%06d>.png`` files (directories and zip archives) or shells out to a
configured external decoder command. Nothing here parses video containers.
"""

from __future__ import annotations

import io
import re
import shlex
import subprocess
import tempfile
import zipfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol, runtime_checkable

from PIL import Image

from .canonical import sha256_hex, text_digest
from .errors import DecodeError

DEFAULT_DURATION_S = 10.0

_IMAGE_MAGIC = (
    (b"\x89PNG\r\n\x1a\n", "png"),
    (b"\xff\xd8\xff", "jpeg"),
    (b"GIF87a", "gif"),
    (b"GIF89a", "gif"),
    (b"BM", "bmp"),
)

_FRAME_NAME = re.compile(r"^frame_\d{6}\.png$")


def detect_image_format(data: bytes) -> str | None:
    """Sniff a raster format tag from magic bytes, or None if unknown."""
    for magic, tag in _IMAGE_MAGIC:
        if data.startswith(magic):
            return tag
    if data[:4] == b"RIFF" and data[8:12] == b"WEBP":
        return "webp"
    return None


class MediaKind(str, Enum):
    IMAGE = "image"
    VIDEO = "video"


@runtime_checkable
class FrameSource(Protocol):
    """Enumerable, random-access source of raster frames."""

    def frame_count(self) -> int: ...

    def read_frame(self, index: int) -> bytes: ...

    def content_digest(self) -> str: ...


@dataclass(frozen=True)
class Frame:
    """One sampled video frame; ``index`` is its position in the frame order."""

    index: int
    image: bytes
    timestamp: float | None = None

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("frame index must be >= 0")
        if not self.image:
            raise ValueError("frame image bytes must be non-empty")


class CaptionSource(str, Enum):
    IMAGE = "image"
    FRAME = "frame"
    VIDEO_AGGREGATE = "video_aggregate"


@dataclass(frozen=True)
class Caption:
    """Textual description of an image, a frame, or a whole video."""

    text: str
    source: CaptionSource
    frame_index: int | None = None
    parent_captions: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("caption text must be non-blank")
        if self.source is CaptionSource.VIDEO_AGGREGATE and not self.parent_captions:
            raise ValueError("aggregated caption requires parent caption digests")

    @property
    def digest(self) -> str:
        return text_digest(self.text)


class DirectoryFrameSource:
    """Frames stored as ``frame_<%06d>.png``; lexicographic name order is frame order."""

    def __init__(self, directory: Path | str) -> None:
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise DecodeError(f"frame directory not found: {self.directory}")
        names = sorted(p.name for p in self.directory.iterdir() if _FRAME_NAME.match(p.name))
        if not names:
            raise DecodeError(f"no frame_<%06d>.png files in {self.directory}")
        self._names = names

    def frame_count(self) -> int:
        return len(self._names)

    def read_frame(self, index: int) -> bytes:
        return (self.directory / self._names[index]).read_bytes()

    def content_digest(self) -> str:
        combined = b"".join(
            bytes.fromhex(sha256_hex(self.read_frame(i))) for i in range(len(self._names))
        )
        return sha256_hex(combined)


class ZipFrameSource:
    """Frame archive: a zip whose members follow the ``frame_<%06d>.png`` scheme.

    This is the upload-friendly equivalent of a frame directory, used by the
    job service where a video arrives as a single file.
    """

    def __init__(self, data: bytes) -> None:
        try:
            self._zip = zipfile.ZipFile(io.BytesIO(data))
        except zipfile.BadZipFile as exc:
            raise DecodeError(f"unreadable frame archive: {exc}") from exc
        names = sorted(
            name for name in self._zip.namelist() if _FRAME_NAME.match(Path(name).name)
        )
        if not names:
            raise DecodeError("frame archive holds no frame_<%06d>.png members")
        self._names = names

    def frame_count(self) -> int:
        return len(self._names)

    def read_frame(self, index: int) -> bytes:
        return self._zip.read(self._names[index])

    def content_digest(self) -> str:
        combined = b"".join(
            bytes.fromhex(sha256_hex(self.read_frame(i))) for i in range(len(self._names))
        )
        return sha256_hex(combined)


class ExternalDecoderSource:
    """Materializes frames by running a configured decoder command.

    The command template receives ``{input}``, ``{output_dir}`` and ``{count}``
    placeholders and must emit ``frame_<%06d>.png`` files into the output
    directory. Extraction happens once, on first access.
    """

    def __init__(self, media_path: Path | str, command_template: str, frame_count: int) -> None:
        self.media_path = Path(media_path)
        if not self.media_path.is_file():
            raise DecodeError(f"video file not found: {self.media_path}")
        self.command_template = command_template
        self.requested_frames = frame_count
        self._tmpdir: tempfile.TemporaryDirectory[str] | None = None
        self._inner: DirectoryFrameSource | None = None

    def _materialize(self) -> DirectoryFrameSource:
        if self._inner is None:
            self._tmpdir = tempfile.TemporaryDirectory(prefix="musebridge-frames-")
            out_dir = Path(self._tmpdir.name)
            command = self.command_template.format(
                input=shlex.quote(str(self.media_path)),
                output_dir=shlex.quote(str(out_dir)),
                count=self.requested_frames,
            )
            proc = subprocess.run(command, shell=True, capture_output=True, text=True)
            if proc.returncode != 0:
                raise DecodeError(
                    f"frame decoder exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
                )
            self._inner = DirectoryFrameSource(out_dir)
        return self._inner

    def frame_count(self) -> int:
        return self._materialize().frame_count()

    def read_frame(self, index: int) -> bytes:
        return self._materialize().read_frame(index)

    def content_digest(self) -> str:
        # Hash the container bytes: frame output depends on the decoder binary.
        return sha256_hex(self.media_path.read_bytes())


@dataclass(frozen=True)
class MediaInput:
    """One generation request: an image or a video plus optional steering text."""

    kind: MediaKind
    payload: bytes | FrameSource
    user_prompt: str | None = None
    requested_duration: float = DEFAULT_DURATION_S

    def validate(self) -> None:
        if self.requested_duration <= 0:
            raise ValueError("requested_duration must be positive")
        if self.kind is MediaKind.IMAGE:
            if not isinstance(self.payload, bytes):
                raise DecodeError("image input requires raw raster bytes")
            decode_image(self.payload)
        else:
            if not isinstance(self.payload, FrameSource):
                raise DecodeError("video input requires a frame source")
            if self.payload.frame_count() < 1:
                raise DecodeError("video resolves to zero frames")

    @property
    def frame_source(self) -> FrameSource:
        if not isinstance(self.payload, FrameSource):
            raise DecodeError("input is not a video frame source")
        return self.payload

    @property
    def image_bytes(self) -> bytes:
        if not isinstance(self.payload, bytes):
            raise DecodeError("input is not an image")
        return self.payload

    def content_digest(self) -> str:
        if isinstance(self.payload, bytes):
            return sha256_hex(self.payload)
        return self.payload.content_digest()


def decode_image(data: bytes) -> None:
    """Raise DecodeError unless ``data`` decodes as a single raster image."""
    if not data:
        raise DecodeError("empty image payload")
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.verify()
    except Exception as exc:
        raise DecodeError(f"undecodable image: {exc}") from exc


def media_from_path(
    path: Path | str,
    *,
    user_prompt: str | None = None,
    requested_duration: float = DEFAULT_DURATION_S,
    frame_count: int = 8,
    decoder_template: str | None = None,
) -> MediaInput:
    """Build a MediaInput from a filesystem path.

    Directories and zip archives are frame sources; raster files are images;
    any other file goes through the external decoder when one is configured.
    """
    path = Path(path)
    if path.is_dir():
        return MediaInput(
            MediaKind.VIDEO,
            DirectoryFrameSource(path),
            user_prompt=user_prompt,
            requested_duration=requested_duration,
        )
    if not path.is_file():
        raise DecodeError(f"input path not found: {path}")
    data = path.read_bytes()
    if detect_image_format(data) is not None:
        return MediaInput(
            MediaKind.IMAGE, data, user_prompt=user_prompt, requested_duration=requested_duration
        )
    if data[:4] == b"PK\x03\x04":
        return MediaInput(
            MediaKind.VIDEO,
            ZipFrameSource(data),
            user_prompt=user_prompt,
            requested_duration=requested_duration,
        )
    if decoder_template:
        return MediaInput(
            MediaKind.VIDEO,
            ExternalDecoderSource(path, decoder_template, frame_count),
            user_prompt=user_prompt,
            requested_duration=requested_duration,
        )
    raise DecodeError(
        f"cannot interpret {path.name}: not an image, frame directory, or frame archive, "
        "and no frame decoder is configured"
    )
