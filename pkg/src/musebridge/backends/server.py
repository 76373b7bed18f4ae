"""FastAPI app serving the five wire routes backed by the deterministic mocks.

Hosted by the ``mock-backends`` CLI command so integration tests and the
UI can run against a real socket without any neural inference service.
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from ..bridge import ChatMessage, LlmParams
from .mock import mock_suite


class CaptionRequest(BaseModel):
    image: str
    format: str = "png"


class ChatTurn(BaseModel):
    role: str
    content: str


class ChatRequest(BaseModel):
    messages: list[ChatTurn]
    temperature: float = 0.7
    max_tokens: int = 256


class MusicRequest(BaseModel):
    prompt: str
    duration_s: float = 10.0


class EmbedRequest(BaseModel):
    modality: str
    payload: str


class LabelsRequest(BaseModel):
    audio: str


def _b64(value: str, field: str) -> bytes:
    try:
        raw = base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError):
        raise HTTPException(status_code=400, detail=f"{field} is not valid base64")
    if not raw:
        raise HTTPException(status_code=400, detail=f"{field} is empty")
    return raw


def create_mock_app() -> FastAPI:
    suite = mock_suite()
    app = FastAPI(title="mock inference backends")

    @app.post("/v1/caption")
    def caption(request: CaptionRequest) -> dict:
        image = _b64(request.image, "image")
        return {"caption": suite.captioner.caption(image, request.format)}

    @app.post("/v1/chat")
    def chat(request: ChatRequest) -> dict:
        if not request.messages:
            raise HTTPException(status_code=400, detail="messages is empty")
        try:
            chat_messages = [
                ChatMessage(role=m.role, content=m.content) for m in request.messages
            ]
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        params = LlmParams(temperature=request.temperature, max_tokens=request.max_tokens)
        return {"content": suite.llm.chat(chat_messages, params)}

    @app.post("/v1/music")
    def music(request: MusicRequest) -> dict:
        if not request.prompt.strip():
            raise HTTPException(status_code=400, detail="prompt is blank")
        if request.duration_s <= 0:
            raise HTTPException(status_code=400, detail="duration_s must be positive")
        payload = suite.music.generate(request.prompt, request.duration_s)
        return {
            "audio": base64.b64encode(payload.audio_wav).decode("ascii"),
            "sample_rate": payload.sample_rate,
            "duration_s": payload.duration_s,
        }

    @app.post("/v1/embed")
    def embed(request: EmbedRequest) -> dict:
        if request.modality not in ("image", "video", "audio"):
            raise HTTPException(status_code=400, detail=f"unknown modality {request.modality}")
        payload = _b64(request.payload, "payload")
        vector = suite.embedder.embed(request.modality, payload)
        return {"vector": list(vector.values), "dim": vector.dim}

    @app.post("/v1/labels")
    def labels(request: LabelsRequest) -> dict:
        audio = _b64(request.audio, "audio")
        distribution = suite.classifier.classify(audio)
        return {
            "distribution": list(distribution.probs),
            "labels": list(distribution.labels),
        }

    return app
