"""Application configuration: JSON file plus per-role backend settings.

Credentials never live in config values; a backend entry names the
environment variable that holds its token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .backends import BackendSuite, build_suite
from .backends.base import BackendConfig

DEFAULT_SIZE_CAP = 64 * 1024 * 1024
BACKEND_ROLES = ("captioner", "llm", "music", "embedder", "classifier")


def _mock_backends() -> dict[str, BackendConfig]:
    return {role: BackendConfig(kind=role, base_url="mock://local") for role in BACKEND_ROLES}


@dataclass(frozen=True)
class AppConfig:
    """Service and CLI settings with offline-friendly defaults (all mocks)."""

    workspace_dir: Path = Path("jobs")
    port: int = 8080
    max_concurrent_jobs: int = 2
    size_cap_bytes: int = DEFAULT_SIZE_CAP
    cors_origins: tuple[str, ...] = ("*",)
    frame_count: int = 8
    default_duration_s: float = 10.0
    template_dir: Optional[Path] = None
    decoder_template: Optional[str] = None
    backends: dict[str, BackendConfig] = field(default_factory=_mock_backends)

    def __post_init__(self) -> None:
        if self.max_concurrent_jobs < 1:
            raise ValueError("max_concurrent_jobs must be at least 1")
        if self.size_cap_bytes < 1:
            raise ValueError("size_cap_bytes must be positive")
        if self.frame_count < 1:
            raise ValueError("frame_count must be at least 1")
        if self.default_duration_s <= 0:
            raise ValueError("default_duration_s must be positive")

    def build_suite(self) -> BackendSuite:
        return build_suite(self.backends)


def _parse_backend(role: str, raw: dict) -> BackendConfig:
    if "base_url" not in raw:
        raise ValueError(f"backend {role!r} config is missing base_url")
    return BackendConfig(
        kind=role,
        base_url=raw["base_url"],
        model_name=raw.get("model_name", ""),
        auth_env_var=raw.get("auth_env_var", ""),
        timeout_s=float(raw.get("timeout_s", 30.0)),
        retry_delays=tuple(float(d) for d in raw.get("retry_delays", (0.5, 2.0))),
        extra_headers=dict(raw.get("extra_headers", {})),
    )


def load_config(path: Path | str) -> AppConfig:
    """Load a JSON config file; absent keys fall back to defaults."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    backends = _mock_backends()
    for role, entry in raw.get("backends", {}).items():
        if role not in BACKEND_ROLES:
            raise ValueError(f"{path}: unknown backend role {role!r}")
        backends[role] = _parse_backend(role, entry)
    defaults = AppConfig()
    return AppConfig(
        workspace_dir=Path(raw.get("workspace_dir", defaults.workspace_dir)),
        port=int(raw.get("port", defaults.port)),
        max_concurrent_jobs=int(raw.get("max_concurrent_jobs", defaults.max_concurrent_jobs)),
        size_cap_bytes=int(raw.get("size_cap_bytes", defaults.size_cap_bytes)),
        cors_origins=tuple(raw.get("cors_origins", list(defaults.cors_origins))),
        frame_count=int(raw.get("frame_count", defaults.frame_count)),
        default_duration_s=float(raw.get("default_duration_s", defaults.default_duration_s)),
        template_dir=Path(raw["template_dir"]) if raw.get("template_dir") else None,
        decoder_template=raw.get("decoder_template"),
        backends=backends,
    )
