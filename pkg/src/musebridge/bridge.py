"""Caption-to-music-prompt bridging.

Renders the checked-in chat templates into message lists and turns a visual
caption into a short music-descriptive prompt via one LLM call. Rendering is
pure; only ``transform_caption`` talks to a backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from .canonical import text_digest
from .errors import EmptyCaption
from .media import Caption, MediaKind

if TYPE_CHECKING:
    from .backends.base import LlmBackend

MAX_PROMPT_CHARS = 200
USER_PROMPT_PREFIX = "\nUser prompt: "

TEMPLATE_IDS = ("video_aggregate", "bridge_image", "bridge_video")
_FEW_SHOT_COUNTS = {"video_aggregate": 0, "bridge_image": 2, "bridge_video": 2}


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"invalid chat role {self.role!r}")
        if not self.content:
            raise ValueError("chat message content must be non-empty")


@dataclass(frozen=True)
class LlmParams:
    """Decoding parameters sent with every chat call and recorded in traces."""

    temperature: float = 0.7
    max_tokens: int = 256


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    system_text: str
    few_shot: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        expected = _FEW_SHOT_COUNTS.get(self.id)
        if expected is None:
            raise ValueError(f"unknown template id {self.id!r}")
        if len(self.few_shot) != expected:
            raise ValueError(
                f"template {self.id!r} must carry {expected} few-shot pairs, got {len(self.few_shot)}"
            )
        if not self.system_text:
            raise ValueError("template system text must be non-empty")


class TemplateStore:
    """Loads the three chat templates from a directory of JSON files."""

    def __init__(self, directory: Path | str | None = None) -> None:
        self.directory = Path(directory) if directory else Path(__file__).parent / "templates"
        self._templates: dict[str, PromptTemplate] = {}
        for template_id in TEMPLATE_IDS:
            path = self.directory / f"{template_id}.json"
            raw = json.loads(path.read_text(encoding="utf-8"))
            if raw.get("id") != template_id:
                raise ValueError(f"{path} declares id {raw.get('id')!r}, expected {template_id!r}")
            self._templates[template_id] = PromptTemplate(
                id=template_id,
                system_text=raw["system"],
                few_shot=tuple((pair["user"], pair["assistant"]) for pair in raw["few_shot"]),
            )

    def get(self, template_id: str) -> PromptTemplate:
        return self._templates[template_id]


_DEFAULT_STORE: TemplateStore | None = None


def default_templates() -> TemplateStore:
    global _DEFAULT_STORE
    if _DEFAULT_STORE is None:
        _DEFAULT_STORE = TemplateStore()
    return _DEFAULT_STORE


@dataclass(frozen=True)
class MusicPrompt:
    """Bridged music-descriptive prompt ready for the music backend."""

    text: str
    length_violation: bool
    source_caption_digest: str | None
    user_prompt_used: bool

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("music prompt text must be non-blank")


def enforce_length(text: str, max_chars: int = MAX_PROMPT_CHARS) -> tuple[str, bool]:
    """Cap ``text`` at ``max_chars``, preferring the last whitespace boundary.

    Returns the (possibly truncated) text and whether the cap was exceeded.
    Idempotent: output always fits within ``max_chars``.
    """
    if not text.strip():
        raise ValueError("text must be non-blank")
    if len(text) <= max_chars:
        return text, False
    head = text[:max_chars]
    cut = head
    for i in range(len(head) - 1, -1, -1):
        if head[i].isspace():
            candidate = head[:i].rstrip()
            if candidate:
                cut = candidate
            break
    return cut, True


def render_aggregate_messages(
    frame_captions: Sequence[Caption], templates: TemplateStore | None = None
) -> list[ChatMessage]:
    """Messages for fusing frame captions into one video caption.

    System text is the aggregation template verbatim; user content is the
    frame captions joined by newline in frame order.
    """
    store = templates or default_templates()
    template = store.get("video_aggregate")
    joined = "\n".join(caption.text for caption in frame_captions)
    return [
        ChatMessage("system", template.system_text),
        ChatMessage("user", joined),
    ]


def render_bridge_messages(
    caption: Caption,
    user_prompt: str | None,
    modality: MediaKind,
    templates: TemplateStore | None = None,
) -> list[ChatMessage]:
    """Assemble the bridging chat: system template, few-shot pairs, final user turn.

    A non-blank ``user_prompt`` is appended to the final user message on its
    own line; the system template already tells the model to prioritize it.
    """
    store = templates or default_templates()
    template = store.get("bridge_image" if modality is MediaKind.IMAGE else "bridge_video")
    messages = [ChatMessage("system", template.system_text)]
    for shot_user, shot_assistant in template.few_shot:
        messages.append(ChatMessage("user", shot_user))
        messages.append(ChatMessage("assistant", shot_assistant))
    final = caption.text
    if user_prompt and user_prompt.strip():
        final = f"{caption.text}{USER_PROMPT_PREFIX}{user_prompt}"
    messages.append(ChatMessage("user", final))
    return messages


def transform_caption(
    caption: Caption,
    user_prompt: str | None,
    llm: "LlmBackend",
    modality: MediaKind,
    *,
    templates: TemplateStore | None = None,
    params: LlmParams = LlmParams(),
) -> MusicPrompt:
    """One LLM call turning a visual caption into a music-descriptive prompt."""
    messages = render_bridge_messages(caption, user_prompt, modality, templates)
    reply = llm.chat(messages, params)
    reply = reply.strip()
    if not reply:
        raise EmptyCaption("bridging LLM returned blank text")
    text, violated = enforce_length(reply)
    return MusicPrompt(
        text=text,
        length_violation=violated,
        source_caption_digest=caption.digest,
        user_prompt_used=bool(user_prompt and user_prompt.strip()),
    )


def ablated_prompt(caption: Caption) -> MusicPrompt:
    """Bypass prompt: caption text used verbatim, no LLM call, no truncation."""
    return MusicPrompt(
        text=caption.text,
        length_violation=len(caption.text) > MAX_PROMPT_CHARS,
        source_caption_digest=caption.digest,
        user_prompt_used=False,
    )


def message_digest_payload(messages: Sequence[ChatMessage]) -> list[dict[str, str]]:
    """Wire-shaped view of a message list, used for canonical hashing."""
    return [{"role": m.role, "content": m.content} for m in messages]


def prompt_digest(text: str) -> str:
    return text_digest(text)
