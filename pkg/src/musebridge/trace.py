"""Immutable generation traces with a canonical serialized form.

The canonical form has sorted keys and no volatile fields (no job id, no
wall-clock timings), so identical inputs under identical backends serialize
to identical bytes. Timings and identity live in the job record instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .canonical import canonical_json

TRACE_SCHEMA = "trace/v1"

STAGE_NAMES = ("caption", "aggregate", "bridge", "music")


@dataclass(frozen=True)
class StageRecord:
    """One backend call: what went in, what came out, which backend ran it.

    ``wall_time_s`` is measured for the job record but excluded from the
    canonical form.
    """

    stage: str
    backend_id: str
    input_digest: str
    output_digest: str
    input_text: Optional[str] = None
    output_text: Optional[str] = None
    flags: Mapping[str, Any] = field(default_factory=dict)
    wall_time_s: float = 0.0

    def __post_init__(self) -> None:
        if self.stage not in STAGE_NAMES:
            raise ValueError(f"unknown stage name {self.stage!r}")
        if not self.backend_id:
            raise ValueError("backend_id must be non-empty")

    def canonical_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "stage": self.stage,
            "backend_id": self.backend_id,
            "input_digest": self.input_digest,
            "output_digest": self.output_digest,
            "flags": dict(self.flags),
        }
        if self.input_text is not None:
            record["input_text"] = self.input_text
        if self.output_text is not None:
            record["output_text"] = self.output_text
        return record


@dataclass(frozen=True)
class PipelineTrace:
    """Complete provenance for one generation job."""

    kind: str
    input_digest: str
    requested_duration_s: float
    options: Mapping[str, Any]
    bridging_bypassed: bool
    stages: tuple[StageRecord, ...]
    result: Mapping[str, Any]
    user_prompt: Optional[str] = None
    prompt_overridden: bool = False
    parent_job_id: Optional[str] = None
    job_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("image", "video"):
            raise ValueError(f"kind must be image or video, got {self.kind!r}")
        self.validate()

    def validate(self) -> None:
        """Enforce the stage-order law.

        Regular jobs: [caption+, aggregate?, bridge?, music] with aggregate
        present iff kind=video and bridge absent iff bypassed. Prompt-override
        jobs carry exactly one music stage.
        """
        names = [record.stage for record in self.stages]
        if not names or names[-1] != "music":
            raise ValueError("trace must end with exactly one music stage")
        if names.count("music") != 1:
            raise ValueError("trace must contain exactly one music stage")
        if self.prompt_overridden:
            if names != ["music"]:
                raise ValueError("prompt-override trace must be a single music stage")
            if not self.parent_job_id:
                raise ValueError("prompt-override trace must link its parent job")
            return
        caption_count = names.count("caption")
        if caption_count < 1:
            raise ValueError("trace must contain at least one caption stage")
        expected = ["caption"] * caption_count
        if self.kind == "video":
            expected.append("aggregate")
        elif "aggregate" in names:
            raise ValueError("image trace must not contain an aggregate stage")
        if self.bridging_bypassed:
            if "bridge" in names:
                raise ValueError("bypassed trace must not contain a bridge stage")
        else:
            expected.append("bridge")
        expected.append("music")
        if names != expected:
            raise ValueError(f"stage order {names} violates the stage-order law")
        for key in ("prompt_stage", "music_stage"):
            index = self.result.get(key)
            if index is not None and not (0 <= int(index) < len(self.stages)):
                raise ValueError(f"result.{key} references a missing stage record")

    def canonical_dict(self) -> dict[str, Any]:
        return {
            "schema": TRACE_SCHEMA,
            "kind": self.kind,
            "input_digest": self.input_digest,
            "user_prompt": self.user_prompt,
            "requested_duration_s": self.requested_duration_s,
            "options": dict(self.options),
            "bridging_bypassed": self.bridging_bypassed,
            "prompt_overridden": self.prompt_overridden,
            "parent_job_id": self.parent_job_id,
            "stages": [record.canonical_dict() for record in self.stages],
            "result": dict(self.result),
        }

    def canonical_json(self) -> str:
        return canonical_json(self.canonical_dict())

    def write(self, path: Path | str) -> None:
        Path(path).write_text(self.canonical_json(), encoding="utf-8")

    @property
    def stage_names(self) -> list[str]:
        return [record.stage for record in self.stages]


def trace_from_dict(data: Mapping[str, Any], job_id: Optional[str] = None) -> PipelineTrace:
    """Rebuild a trace from its canonical dict (job id supplied separately)."""
    if data.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"unsupported trace schema {data.get('schema')!r}")
    stages = tuple(
        StageRecord(
            stage=record["stage"],
            backend_id=record["backend_id"],
            input_digest=record["input_digest"],
            output_digest=record["output_digest"],
            input_text=record.get("input_text"),
            output_text=record.get("output_text"),
            flags=record.get("flags", {}),
        )
        for record in data["stages"]
    )
    return PipelineTrace(
        kind=data["kind"],
        input_digest=data["input_digest"],
        requested_duration_s=data["requested_duration_s"],
        options=data["options"],
        bridging_bypassed=data["bridging_bypassed"],
        stages=stages,
        result=data["result"],
        user_prompt=data.get("user_prompt"),
        prompt_overridden=data.get("prompt_overridden", False),
        parent_job_id=data.get("parent_job_id"),
        job_id=job_id,
    )


def load_trace(path: Path | str, job_id: Optional[str] = None) -> PipelineTrace:
    return trace_from_dict(
        json.loads(Path(path).read_text(encoding="utf-8")), job_id=job_id
    )
