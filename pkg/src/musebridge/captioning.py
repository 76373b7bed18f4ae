"""Visual captioning: frame sampling, per-image captions, video aggregation.

Images get one captioner call; videos get one call per sampled frame plus a
single LLM call that fuses the frame captions into a video-level caption.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, Callable, Optional, Sequence

from .bridge import LlmParams, TemplateStore, render_aggregate_messages
from .errors import DecodeError, EmptyCaption, MuseBridgeError
from .media import Caption, CaptionSource, Frame, FrameSource, detect_image_format

if TYPE_CHECKING:
    from .backends.base import CaptionerBackend, LlmBackend

DEFAULT_CAPTION_WORKERS = 4

CaptionCallback = Callable[[Frame, Caption, float], None]


def sample_frames(source: FrameSource, n: int) -> list[Frame]:
    """Uniformly sample k = min(n, T) frames at indices floor(i*T/k).

    Indices are strictly increasing and cover the clip from the first frame.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    total = source.frame_count()
    if total < 1:
        raise DecodeError("frame source is empty")
    k = min(n, total)
    frames = []
    for i in range(k):
        index = i * total // k
        frames.append(Frame(index=index, image=source.read_frame(index)))
    return frames


def caption_image(image: bytes, captioner: "CaptionerBackend") -> Caption:
    """One captioner call; the reply is kept verbatim apart from edge whitespace."""
    if not image:
        raise ValueError("image must be non-empty")
    image_format = detect_image_format(image) or "png"
    text = captioner.caption(image, image_format).strip()
    if not text:
        raise EmptyCaption("captioner returned blank text")
    return Caption(text=text, source=CaptionSource.IMAGE)


def _caption_frame(frame: Frame, captioner: "CaptionerBackend") -> Caption:
    image_format = detect_image_format(frame.image) or "png"
    text = captioner.caption(frame.image, image_format).strip()
    if not text:
        raise EmptyCaption(f"captioner returned blank text for frame {frame.index}")
    return Caption(text=text, source=CaptionSource.FRAME, frame_index=frame.index)


def caption_frames(
    frames: Sequence[Frame],
    captioner: "CaptionerBackend",
    *,
    max_workers: int = DEFAULT_CAPTION_WORKERS,
    on_caption: Optional[CaptionCallback] = None,
) -> list[Caption]:
    """Caption every frame, fanning out across a small worker pool.

    Results come back in frame order regardless of completion order. Errors
    carry a ``frame_index`` attribute naming the offending frame.
    """
    if not frames:
        raise ValueError("frames must be non-empty")

    def task(frame: Frame) -> Caption:
        started = time.monotonic()
        try:
            caption = _caption_frame(frame, captioner)
        except MuseBridgeError as exc:
            exc.frame_index = frame.index
            raise
        if on_caption is not None:
            on_caption(frame, caption, time.monotonic() - started)
        return caption

    workers = max(1, min(max_workers, len(frames)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, frames))


def aggregate_captions(
    frame_captions: Sequence[Caption],
    llm: "LlmBackend",
    *,
    templates: Optional[TemplateStore] = None,
    params: LlmParams = LlmParams(),
) -> Caption:
    """Fuse frame captions into one video caption with a single LLM call."""
    if not frame_captions:
        raise ValueError("frame_captions must be non-empty")
    if any(c.source is not CaptionSource.FRAME for c in frame_captions):
        raise ValueError("aggregate_captions expects frame-sourced captions")
    messages = render_aggregate_messages(frame_captions, templates)
    text = llm.chat(messages, params).strip()
    if not text:
        raise EmptyCaption("aggregation LLM returned blank text")
    return Caption(
        text=text,
        source=CaptionSource.VIDEO_AGGREGATE,
        parent_captions=tuple(c.digest for c in frame_captions),
    )
