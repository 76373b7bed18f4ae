"""Filesystem-backed job management for the HTTP service.

Each job owns a directory jobs/<id>/ holding the uploaded input, a job.json
status record, and, once done, trace.json plus output.wav. job.json is the
volatile side (state, timings, errors); trace.json stays canonical and
immutable. A restart rescans the workspace: done and failed jobs survive,
jobs caught mid-flight are marked failed.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional

from ..audio import encode_wav
from ..bridge import TemplateStore
from ..errors import MuseBridgeError
from ..media import MediaInput, MediaKind, ZipFrameSource, detect_image_format
from ..pipeline import PipelineOptions, run_music_only, run_pipeline
from ..trace import load_trace

if TYPE_CHECKING:
    from ..backends.base import BackendSuite

logger = logging.getLogger(__name__)

JOB_SCHEMA = "job/v1"
TERMINAL_STATES = ("done", "failed")
_STATE_ORDER = {"queued": 0, "captioning": 1, "bridging": 2, "generating": 3, "done": 4}
_PIPELINE_STATE = {"caption": "captioning", "aggregate": "captioning", "bridge": "bridging", "music": "generating"}


class JobNotFound(KeyError):
    pass


class InvalidState(RuntimeError):
    pass


class UnsupportedMedia(ValueError):
    pass


class PayloadTooLarge(ValueError):
    pass


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class JobManager:
    """Owns the workspace directory and the worker pool."""

    def __init__(
        self,
        workspace: Path | str,
        suite: "BackendSuite",
        *,
        max_concurrent_jobs: int = 2,
        size_cap_bytes: int = 64 * 1024 * 1024,
        default_frame_count: int = 8,
        default_duration_s: float = 10.0,
        template_dir: Optional[Path] = None,
    ) -> None:
        self.workspace = Path(workspace)
        self.workspace.mkdir(parents=True, exist_ok=True)
        self.suite = suite
        self.size_cap_bytes = size_cap_bytes
        self.default_frame_count = default_frame_count
        self.default_duration_s = default_duration_s
        self.templates = TemplateStore(template_dir) if template_dir else None
        self._lock = threading.Lock()
        self._active: set[str] = set()
        self._executor = ThreadPoolExecutor(
            max_workers=max_concurrent_jobs, thread_name_prefix="job"
        )
        self._closed = False
        self._recover()

    # ---- persistence helpers ----

    def job_dir(self, job_id: str) -> Path:
        return self.workspace / job_id

    def _job_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "job.json"

    def _write_job(self, record: dict[str, Any]) -> None:
        path = self._job_path(record["job_id"])
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record, sort_keys=True, indent=2), encoding="utf-8")
        tmp.replace(path)

    def _read_job(self, job_id: str) -> dict[str, Any]:
        path = self._job_path(job_id)
        if not path.is_file():
            raise JobNotFound(job_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def _recover(self) -> None:
        """Rescan the workspace after a restart.

        Terminal jobs are left untouched; anything mid-flight lost its worker
        with the old process and is marked failed.
        """
        for entry in sorted(self.workspace.iterdir()) if self.workspace.is_dir() else []:
            if not entry.is_dir() or not (entry / "job.json").is_file():
                continue
            try:
                record = json.loads((entry / "job.json").read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                logger.warning("skipping unreadable job record %s: %s", entry, exc)
                continue
            if record.get("state") not in TERMINAL_STATES:
                record["state"] = "failed"
                record["error"] = {"detail": "interrupted by restart", "stage": None}
                self._write_job(record)

    # ---- state machine ----

    def _set_state(self, job_id: str, state: str) -> None:
        with self._lock:
            record = self._read_job(job_id)
            current = record["state"]
            if current in TERMINAL_STATES:
                return
            if state != "failed" and _STATE_ORDER[state] <= _STATE_ORDER[current]:
                return
            record["state"] = state
            self._write_job(record)

    def _fail(self, job_id: str, detail: str, stage: Optional[str]) -> None:
        with self._lock:
            try:
                record = self._read_job(job_id)
            except JobNotFound:
                return
            if record["state"] in TERMINAL_STATES:
                return
            record["state"] = "failed"
            record["error"] = {"detail": detail, "stage": stage}
            self._write_job(record)
            self._active.discard(job_id)

    # ---- submission ----

    def submit(
        self,
        media_bytes: bytes,
        *,
        user_prompt: Optional[str] = None,
        duration_s: Optional[float] = None,
        frame_count: Optional[int] = None,
        bypass_bridge: bool = False,
    ) -> str:
        """Persist a new job and schedule the pipeline. Returns the job id."""
        if self._closed:
            raise InvalidState("manager is shut down")
        if len(media_bytes) > self.size_cap_bytes:
            raise PayloadTooLarge(
                f"upload of {len(media_bytes)} bytes exceeds cap {self.size_cap_bytes}"
            )
        if not media_bytes:
            raise UnsupportedMedia("empty upload")
        image_format = detect_image_format(media_bytes)
        if image_format is not None:
            kind = MediaKind.IMAGE
            input_name = f"input.{image_format}"
        elif media_bytes[:4] == b"PK\x03\x04":
            kind = MediaKind.VIDEO
            input_name = "input.zip"
        else:
            raise UnsupportedMedia("upload is neither a raster image nor a frame archive")

        job_id = uuid.uuid4().hex
        duration = duration_s if duration_s is not None else self.default_duration_s
        frames = frame_count if frame_count is not None else self.default_frame_count
        if duration <= 0:
            raise UnsupportedMedia("duration must be positive")
        if frames < 1:
            raise UnsupportedMedia("frame count must be at least 1")

        job_path = self.job_dir(job_id)
        job_path.mkdir(parents=True)
        (job_path / input_name).write_bytes(media_bytes)
        record = {
            "schema": JOB_SCHEMA,
            "job_id": job_id,
            "state": "queued",
            "created_at": _utc_now(),
            "kind": kind.value,
            "input_file": input_name,
            "user_prompt": user_prompt,
            "options": {"frame_count": frames, "bypass_bridge": bypass_bridge},
            "requested_duration_s": duration,
            "prompt_overridden": False,
            "parent_job_id": None,
            "error": None,
            "timings": {},
        }
        self._write_job(record)
        with self._lock:
            self._active.add(job_id)
        self._executor.submit(self._run_pipeline_job, job_id)
        return job_id

    def regenerate(self, source_job_id: str, prompt: str) -> str:
        """New single-stage job generating audio from an edited prompt."""
        if self._closed:
            raise InvalidState("manager is shut down")
        source = self._read_job(source_job_id)
        if source["state"] != "done":
            raise InvalidState(
                f"job {source_job_id} is {source['state']}, regeneration needs done"
            )
        prompt = (prompt or "").strip()
        if not prompt:
            raise UnsupportedMedia("edited prompt must be non-blank")
        source_trace = load_trace(self.job_dir(source_job_id) / "trace.json")

        job_id = uuid.uuid4().hex
        job_path = self.job_dir(job_id)
        job_path.mkdir(parents=True)
        record = {
            "schema": JOB_SCHEMA,
            "job_id": job_id,
            "state": "queued",
            "created_at": _utc_now(),
            "kind": source["kind"],
            "input_file": None,
            "user_prompt": None,
            "options": {},
            "requested_duration_s": source["requested_duration_s"],
            "prompt_overridden": True,
            "parent_job_id": source_job_id,
            "edited_prompt": prompt,
            "error": None,
            "timings": {},
        }
        self._write_job(record)
        with self._lock:
            self._active.add(job_id)
        self._executor.submit(
            self._run_regenerate_job,
            job_id,
            prompt,
            source["requested_duration_s"],
            source_job_id,
            source_trace.input_digest,
            source["kind"],
        )
        return job_id

    # ---- workers ----

    def _media_input(self, record: dict[str, Any]) -> MediaInput:
        data = (self.job_dir(record["job_id"]) / record["input_file"]).read_bytes()
        if record["kind"] == "image":
            payload: Any = data
        else:
            payload = ZipFrameSource(data)
        return MediaInput(
            kind=MediaKind(record["kind"]),
            payload=payload,
            user_prompt=record["user_prompt"],
            requested_duration=record["requested_duration_s"],
        )

    def _finish(self, job_id: str, trace_json: str, audio_wav: bytes, total_s: float) -> None:
        job_path = self.job_dir(job_id)
        (job_path / "output.wav").write_bytes(audio_wav)
        (job_path / "trace.json").write_text(trace_json, encoding="utf-8")
        with self._lock:
            record = self._read_job(job_id)
            if record["state"] in TERMINAL_STATES:
                return
            record["state"] = "done"
            record["timings"] = {"total_s": round(total_s, 6)}
            self._write_job(record)
            self._active.discard(job_id)

    def _run_pipeline_job(self, job_id: str) -> None:
        started = time.monotonic()
        try:
            record = self._read_job(job_id)
            media = self._media_input(record)
            options = PipelineOptions(
                frame_count=record["options"]["frame_count"],
                bypass_bridge=record["options"]["bypass_bridge"],
            )
            result = run_pipeline(
                media,
                self.suite,
                options,
                job_id=job_id,
                templates=self.templates,
                on_stage=lambda stage: self._set_state(job_id, _PIPELINE_STATE[stage]),
            )
            self._finish(
                job_id,
                result.trace.canonical_json(),
                encode_wav(result.audio),
                time.monotonic() - started,
            )
        except MuseBridgeError as exc:
            self._fail(job_id, str(exc), getattr(exc, "stage", None))
        except Exception as exc:  # worker threads must never die silently
            logger.exception("job %s crashed", job_id)
            self._fail(job_id, f"internal error: {exc}", None)

    def _run_regenerate_job(
        self,
        job_id: str,
        prompt: str,
        duration_s: float,
        parent_job_id: str,
        parent_input_digest: str,
        parent_kind: str,
    ) -> None:
        started = time.monotonic()
        try:
            result = run_music_only(
                prompt,
                duration_s,
                self.suite,
                parent_job_id=parent_job_id,
                parent_input_digest=parent_input_digest,
                parent_kind=parent_kind,
                job_id=job_id,
                on_stage=lambda stage: self._set_state(job_id, _PIPELINE_STATE[stage]),
            )
            self._finish(
                job_id,
                result.trace.canonical_json(),
                encode_wav(result.audio),
                time.monotonic() - started,
            )
        except MuseBridgeError as exc:
            self._fail(job_id, str(exc), getattr(exc, "stage", None))
        except Exception as exc:
            logger.exception("job %s crashed", job_id)
            self._fail(job_id, f"internal error: {exc}", None)

    # ---- queries ----

    def get(self, job_id: str) -> dict[str, Any]:
        """Full job view: status record plus trace and texts when available."""
        record = self._read_job(job_id)
        view = {
            "job_id": record["job_id"],
            "state": record["state"],
            "created_at": record["created_at"],
            "kind": record["kind"],
            "user_prompt": record["user_prompt"],
            "options": record["options"],
            "requested_duration_s": record["requested_duration_s"],
            "prompt_overridden": record["prompt_overridden"],
            "parent_job_id": record["parent_job_id"],
            "error": record["error"],
            "caption": None,
            "music_prompt": None,
            "audio_url": None,
            "trace": None,
        }
        trace_path = self.job_dir(job_id) / "trace.json"
        if record["state"] == "done" and trace_path.is_file():
            trace_doc = json.loads(trace_path.read_text(encoding="utf-8"))
            view["trace"] = trace_doc
            view["music_prompt"] = trace_doc["result"]["music_prompt"]
            for stage in trace_doc["stages"]:
                if stage["stage"] in ("caption", "aggregate"):
                    view["caption"] = stage["output_text"]
            view["audio_url"] = f"/api/jobs/{job_id}/audio"
        if record["prompt_overridden"]:
            view["music_prompt"] = view["music_prompt"] or record.get("edited_prompt")
        return view

    def list_jobs(self) -> list[dict[str, Any]]:
        summaries = []
        if not self.workspace.is_dir():
            return summaries
        for entry in sorted(self.workspace.iterdir()):
            if not (entry / "job.json").is_file():
                continue
            try:
                record = json.loads((entry / "job.json").read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                continue
            summaries.append(
                {
                    "job_id": record["job_id"],
                    "state": record["state"],
                    "created_at": record["created_at"],
                    "kind": record["kind"],
                    "prompt_overridden": record["prompt_overridden"],
                    "parent_job_id": record["parent_job_id"],
                }
            )
        summaries.sort(key=lambda s: (s["created_at"], s["job_id"]))
        return summaries

    def audio_path(self, job_id: str) -> Path:
        record = self._read_job(job_id)
        if record["state"] != "done":
            raise InvalidState(f"job {job_id} is {record['state']}, audio needs done")
        path = self.job_dir(job_id) / "output.wav"
        if not path.is_file():
            logger.error("integrity: job %s is done but output.wav is missing", job_id)
            raise JobNotFound(f"audio for job {job_id} is missing from the workspace")
        return path

    # ---- lifecycle ----

    def shutdown(self) -> None:
        """Stop the pool and mark anything still in flight as failed."""
        if self._closed:
            return
        self._closed = True
        self._executor.shutdown(wait=False, cancel_futures=True)
        with self._lock:
            active = list(self._active)
        for job_id in active:
            self._fail(job_id, "shutdown", None)
