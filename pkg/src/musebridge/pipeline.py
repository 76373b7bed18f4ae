"""End-to-end orchestration: caption, bridge, generate, trace.

``run_pipeline`` executes the full three-module flow. ``run_pipeline_ablated``
bypasses the bridging LLM and feeds the caption to the music backend
verbatim. ``run_music_only`` regenerates audio from an edited prompt,
producing a single-stage trace linked to its parent job.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable, Optional

from .audio import AudioClip
from .bridge import (
    LlmParams,
    MusicPrompt,
    TemplateStore,
    ablated_prompt,
    message_digest_payload,
    render_bridge_messages,
    transform_caption,
)
from .canonical import canonical_json_bytes, sha256_hex, text_digest
from .captioning import (
    DEFAULT_CAPTION_WORKERS,
    aggregate_captions,
    caption_frames,
    caption_image,
    sample_frames,
)
from .errors import MuseBridgeError
from .media import Caption, CaptionSource, Frame, MediaInput, MediaKind
from .music import decode_music_payload
from .trace import PipelineTrace, StageRecord

if TYPE_CHECKING:
    from .backends.base import BackendSuite

DEFAULT_FRAME_COUNT = 8

StageCallback = Callable[[str], None]


@dataclass(frozen=True)
class PipelineOptions:
    frame_count: int = DEFAULT_FRAME_COUNT
    bypass_bridge: bool = False
    caption_workers: int = DEFAULT_CAPTION_WORKERS

    def __post_init__(self) -> None:
        if self.frame_count < 1:
            raise ValueError("frame_count must be at least 1")
        if self.caption_workers < 1:
            raise ValueError("caption_workers must be at least 1")


@dataclass(frozen=True)
class GenerationResult:
    audio: AudioClip
    music_prompt: MusicPrompt
    trace: PipelineTrace


@contextmanager
def _stage(name: str, on_stage: Optional[StageCallback] = None):
    """Tag any domain error with the stage it happened in."""
    if on_stage is not None:
        on_stage(name)
    try:
        yield
    except MuseBridgeError as exc:
        if not hasattr(exc, "stage"):
            exc.stage = name
        raise


def _caption_record(caption: Caption, image: bytes, backend_id: str, wall: float) -> StageRecord:
    flags: dict = {"source": caption.source.value}
    if caption.frame_index is not None:
        flags["frame_index"] = caption.frame_index
    return StageRecord(
        stage="caption",
        backend_id=backend_id,
        input_digest=sha256_hex(image),
        output_digest=caption.digest,
        output_text=caption.text,
        flags=flags,
        wall_time_s=wall,
    )


def _llm_flags(template: str, params: LlmParams) -> dict:
    return {
        "template": template,
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    }


def run_pipeline(
    media: MediaInput,
    backends: "BackendSuite",
    options: PipelineOptions = PipelineOptions(),
    *,
    job_id: Optional[str] = None,
    llm_params: LlmParams = LlmParams(),
    templates: Optional[TemplateStore] = None,
    on_stage: Optional[StageCallback] = None,
) -> GenerationResult:
    """Run the full caption → bridge → generate flow and record its trace."""
    media.validate()
    stages: list[StageRecord] = []

    if media.kind is MediaKind.IMAGE:
        with _stage("caption", on_stage):
            started = time.monotonic()
            caption = caption_image(media.image_bytes, backends.captioner)
            stages.append(
                _caption_record(
                    caption,
                    media.image_bytes,
                    backends.captioner.backend_id,
                    time.monotonic() - started,
                )
            )
    else:
        with _stage("caption", on_stage):
            frames = sample_frames(media.frame_source, options.frame_count)
            timings: dict[int, float] = {}

            def record_timing(frame: Frame, _caption: Caption, wall: float) -> None:
                timings[frame.index] = wall

            frame_captions = caption_frames(
                frames,
                backends.captioner,
                max_workers=options.caption_workers,
                on_caption=record_timing,
            )
            for frame, frame_caption in zip(frames, frame_captions):
                stages.append(
                    _caption_record(
                        frame_caption,
                        frame.image,
                        backends.captioner.backend_id,
                        timings.get(frame.index, 0.0),
                    )
                )
        with _stage("aggregate", on_stage):
            started = time.monotonic()
            caption = aggregate_captions(
                frame_captions, backends.llm, templates=templates, params=llm_params
            )
            joined = "\n".join(c.text for c in frame_captions)
            flags = _llm_flags("video_aggregate", llm_params)
            flags["parent_captions"] = list(caption.parent_captions or ())
            stages.append(
                StageRecord(
                    stage="aggregate",
                    backend_id=backends.llm.backend_id,
                    input_digest=text_digest(joined),
                    output_digest=caption.digest,
                    input_text=joined,
                    output_text=caption.text,
                    flags=flags,
                    wall_time_s=time.monotonic() - started,
                )
            )

    modality = media.kind
    if options.bypass_bridge:
        prompt = ablated_prompt(caption)
    else:
        with _stage("bridge", on_stage):
            started = time.monotonic()
            messages = render_bridge_messages(caption, media.user_prompt, modality, templates)
            prompt = transform_caption(
                caption,
                media.user_prompt,
                backends.llm,
                modality,
                templates=templates,
                params=llm_params,
            )
            template_id = "bridge_image" if modality is MediaKind.IMAGE else "bridge_video"
            flags = _llm_flags(template_id, llm_params)
            flags["user_prompt_used"] = prompt.user_prompt_used
            flags["length_violation"] = prompt.length_violation
            stages.append(
                StageRecord(
                    stage="bridge",
                    backend_id=backends.llm.backend_id,
                    input_digest=sha256_hex(
                        canonical_json_bytes(message_digest_payload(messages))
                    ),
                    output_digest=text_digest(prompt.text),
                    input_text=messages[-1].content,
                    output_text=prompt.text,
                    flags=flags,
                    wall_time_s=time.monotonic() - started,
                )
            )

    with _stage("music", on_stage):
        started = time.monotonic()
        payload = backends.music.generate(prompt.text, media.requested_duration)
        clip = decode_music_payload(payload, media.requested_duration)
        audio_digest = sha256_hex(payload.audio_wav)
        stages.append(
            StageRecord(
                stage="music",
                backend_id=backends.music.backend_id,
                input_digest=text_digest(prompt.text),
                output_digest=audio_digest,
                input_text=prompt.text,
                flags={
                    "duration_s": media.requested_duration,
                    "sample_rate": clip.sample_rate,
                    "channels": clip.channels,
                    "honors_duration": payload.duration_s is not None,
                },
                wall_time_s=time.monotonic() - started,
            )
        )

    # The stage immediately before music produced the prompt text on every
    # path: bridge normally, caption or aggregate when bypassed.
    prompt_stage = len(stages) - 2
    trace = PipelineTrace(
        kind=media.kind.value,
        input_digest=media.content_digest(),
        requested_duration_s=media.requested_duration,
        options={
            "frame_count": options.frame_count,
            "bypass_bridge": options.bypass_bridge,
        },
        bridging_bypassed=options.bypass_bridge,
        stages=tuple(stages),
        result={
            "music_prompt": prompt.text,
            "length_violation": prompt.length_violation,
            "prompt_stage": prompt_stage,
            "music_stage": len(stages) - 1,
            "audio_digest": audio_digest,
            "audio_duration_s": clip.duration,
            "audio_sample_rate": clip.sample_rate,
            "audio_channels": clip.channels,
        },
        user_prompt=media.user_prompt,
        job_id=job_id,
    )
    return GenerationResult(audio=clip, music_prompt=prompt, trace=trace)


def run_pipeline_ablated(
    media: MediaInput,
    backends: "BackendSuite",
    options: PipelineOptions = PipelineOptions(),
    *,
    job_id: Optional[str] = None,
    llm_params: LlmParams = LlmParams(),
    templates: Optional[TemplateStore] = None,
    on_stage: Optional[StageCallback] = None,
) -> GenerationResult:
    """Bridge-bypass run: the caption text is the music prompt verbatim."""
    return run_pipeline(
        media,
        backends,
        replace(options, bypass_bridge=True),
        job_id=job_id,
        llm_params=llm_params,
        templates=templates,
        on_stage=on_stage,
    )


def run_music_only(
    prompt_text: str,
    duration_s: float,
    backends: "BackendSuite",
    *,
    parent_job_id: str,
    parent_input_digest: str,
    parent_kind: str,
    job_id: Optional[str] = None,
    on_stage: Optional[StageCallback] = None,
) -> GenerationResult:
    """Regenerate audio from an edited prompt, skipping caption and bridge."""
    prompt_text = prompt_text.strip()
    if not prompt_text:
        raise ValueError("edited prompt must be non-blank")
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    prompt = MusicPrompt(
        text=prompt_text,
        length_violation=len(prompt_text) > 200,
        source_caption_digest=None,
        user_prompt_used=False,
    )
    with _stage("music", on_stage):
        started = time.monotonic()
        payload = backends.music.generate(prompt.text, duration_s)
        clip = decode_music_payload(payload, duration_s)
        audio_digest = sha256_hex(payload.audio_wav)
        record = StageRecord(
            stage="music",
            backend_id=backends.music.backend_id,
            input_digest=text_digest(prompt.text),
            output_digest=audio_digest,
            input_text=prompt.text,
            flags={
                "duration_s": duration_s,
                "sample_rate": clip.sample_rate,
                "channels": clip.channels,
                "honors_duration": payload.duration_s is not None,
            },
            wall_time_s=time.monotonic() - started,
        )
    trace = PipelineTrace(
        kind=parent_kind,
        input_digest=parent_input_digest,
        requested_duration_s=duration_s,
        options={},
        bridging_bypassed=True,
        stages=(record,),
        result={
            "music_prompt": prompt.text,
            "length_violation": prompt.length_violation,
            "prompt_stage": None,
            "music_stage": 0,
            "audio_digest": audio_digest,
            "audio_duration_s": clip.duration,
            "audio_sample_rate": clip.sample_rate,
            "audio_channels": clip.channels,
        },
        prompt_overridden=True,
        parent_job_id=parent_job_id,
        job_id=job_id,
    )
    return GenerationResult(audio=clip, music_prompt=prompt, trace=trace)
