"""REST routes over the job manager.

POST /api/jobs             submit media (multipart), returns 202 {job_id}
GET  /api/jobs             list job summaries
GET  /api/jobs/{id}        full job view with trace when done
POST /api/jobs/{id}/regenerate   new job from an edited prompt
GET  /api/jobs/{id}/audio  the generated WAV
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel

from ..config import AppConfig
from .jobs import InvalidState, JobManager, JobNotFound, PayloadTooLarge, UnsupportedMedia


class RegenerateRequest(BaseModel):
    prompt: str


def _parse_bool(value: Optional[str]) -> bool:
    if value is None:
        return False
    return value.strip().lower() in ("1", "true", "yes", "on")


def create_app(config: Optional[AppConfig] = None, manager: Optional[JobManager] = None) -> FastAPI:
    """Build the service app; a caller-supplied manager wins over config."""
    config = config or AppConfig()
    if manager is None:
        manager = JobManager(
            config.workspace_dir,
            config.build_suite(),
            max_concurrent_jobs=config.max_concurrent_jobs,
            size_cap_bytes=config.size_cap_bytes,
            default_frame_count=config.frame_count,
            default_duration_s=config.default_duration_s,
            template_dir=config.template_dir,
        )

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(title="visual-to-music service", lifespan=lifespan)
    app.state.manager = manager
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.post("/api/jobs", status_code=202)
    async def submit_job(
        media: UploadFile,
        user_prompt: Optional[str] = Form(default=None),
        duration: Optional[float] = Form(default=None),
        frames: Optional[int] = Form(default=None),
        bypass_bridge: Optional[str] = Form(default=None),
    ) -> dict:
        data = await media.read()
        try:
            job_id = manager.submit(
                data,
                user_prompt=user_prompt if user_prompt else None,
                duration_s=duration,
                frame_count=frames,
                bypass_bridge=_parse_bool(bypass_bridge),
            )
        except PayloadTooLarge as exc:
            raise HTTPException(status_code=413, detail=str(exc))
        except UnsupportedMedia as exc:
            raise HTTPException(status_code=415, detail=str(exc))
        except InvalidState as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        return {"job_id": job_id}

    @app.get("/api/jobs")
    def list_jobs() -> dict:
        return {"jobs": manager.list_jobs()}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        try:
            return manager.get(job_id)
        except JobNotFound:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")

    @app.post("/api/jobs/{job_id}/regenerate", status_code=202)
    def regenerate(job_id: str, request: RegenerateRequest) -> dict:
        if not request.prompt.strip():
            raise HTTPException(status_code=422, detail="prompt must be non-blank")
        try:
            new_id = manager.regenerate(job_id, request.prompt)
        except JobNotFound:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        except InvalidState as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except UnsupportedMedia as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"job_id": new_id}

    @app.get("/api/jobs/{job_id}/audio")
    def fetch_audio(job_id: str) -> FileResponse:
        try:
            path = manager.audio_path(job_id)
        except JobNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except InvalidState as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return FileResponse(path, media_type="audio/wav", filename=f"{job_id}.wav")

    return app
