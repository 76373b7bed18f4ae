"""JSONL evaluation manifest loading and validation.

One item per line: {id, media_path, media_type, reference_audio_path,
generated_audio_paths}. Relative paths resolve against the manifest's own
directory. Errors name the offending line so batch files are debuggable.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..canonical import sha256_hex
from ..errors import ManifestError
from .types import EvalManifest, ManifestItem

MEDIA_TYPES = ("image", "video")

REQUIRED_FIELDS = (
    "id",
    "media_path",
    "media_type",
    "reference_audio_path",
    "generated_audio_paths",
)


def _parse_item(raw: dict, line_no: int, base: Path) -> ManifestItem:
    for field_name in REQUIRED_FIELDS:
        if field_name not in raw:
            raise ManifestError(f"line {line_no}: missing field {field_name!r}")
    if not isinstance(raw["id"], str) or not raw["id"]:
        raise ManifestError(f"line {line_no}: id must be a non-empty string")
    if raw["media_type"] not in MEDIA_TYPES:
        raise ManifestError(
            f"line {line_no}: media_type must be one of {MEDIA_TYPES}, got {raw['media_type']!r}"
        )
    generated = raw["generated_audio_paths"]
    if not isinstance(generated, dict) or not generated:
        raise ManifestError(f"line {line_no}: generated_audio_paths must be a non-empty object")

    def resolve(value: object, field_name: str) -> Path:
        if not isinstance(value, str) or not value:
            raise ManifestError(f"line {line_no}: {field_name} must be a non-empty string")
        path = Path(value)
        if not path.is_absolute():
            path = base / path
        if not path.exists():
            raise ManifestError(f"line {line_no}: {field_name} does not exist: {path}")
        return path

    return ManifestItem(
        id=raw["id"],
        media_path=resolve(raw["media_path"], "media_path"),
        media_type=raw["media_type"],
        reference_audio_path=resolve(raw["reference_audio_path"], "reference_audio_path"),
        generated_audio_paths={
            system: resolve(path, f"generated_audio_paths[{system}]")
            for system, path in generated.items()
        },
    )


def load_manifest(path: Path | str) -> EvalManifest:
    """Load and fully validate a JSONL manifest file."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    raw_bytes = path.read_bytes()
    base = path.parent
    items: list[ManifestItem] = []
    seen_ids: set[str] = set()
    systems: set[str] | None = None
    for line_no, line in enumerate(raw_bytes.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
        if not isinstance(raw, dict):
            raise ManifestError(f"line {line_no}: expected a JSON object")
        item = _parse_item(raw, line_no, base)
        if item.id in seen_ids:
            raise ManifestError(f"line {line_no}: duplicate id {item.id!r}")
        seen_ids.add(item.id)
        item_systems = set(item.generated_audio_paths)
        if systems is None:
            systems = item_systems
        elif item_systems != systems:
            raise ManifestError(
                f"line {line_no}: system set {sorted(item_systems)} differs from"
                f" {sorted(systems)} on earlier lines"
            )
        items.append(item)
    if not items:
        raise ManifestError(f"manifest is empty: {path}")
    return EvalManifest(items=tuple(items), source_digest=sha256_hex(raw_bytes))
