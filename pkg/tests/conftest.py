"""Shared fixtures: deterministic media payloads and the mock backend suite."""

from __future__ import annotations

import io
from pathlib import Path

import pytest
from PIL import Image

from musebridge.backends import mock_suite
from musebridge.backends.base import BackendSuite

GOLDEN_DIR = Path(__file__).parent / "golden"


def png_bytes(color=(255, 0, 0), size=(1, 1)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture()
def red_pixel() -> bytes:
    """The fixed 1x1 red PNG used by the determinism checks."""
    return png_bytes()


@pytest.fixture()
def suite() -> BackendSuite:
    return mock_suite()


@pytest.fixture()
def frame_dir_factory(tmp_path):
    """Build a directory frame source with n distinct PNG frames."""

    def build(n: int, name: str = "clip") -> Path:
        directory = tmp_path / name
        directory.mkdir()
        for i in range(n):
            (directory / f"frame_{i:06d}.png").write_bytes(
                png_bytes(color=(i * 7 % 256, 50, 200), size=(2, 2))
            )
        return directory

    return build


@pytest.fixture()
def golden_dir() -> Path:
    return GOLDEN_DIR
