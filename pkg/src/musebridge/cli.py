"""Command-line front door: generate, eval, serve, mock-backends.

Exit codes: 0 success, 1 domain error (stage named on stderr), 2 usage
error. Path existence is checked by hand so bad inputs count as domain
errors, not usage errors.
"""

from __future__ import annotations

import socket
import sys
from pathlib import Path
from typing import NoReturn, Optional

import click
import uvicorn

from .audio import encode_wav
from .config import AppConfig, load_config
from .errors import ManifestError, MuseBridgeError
from .media import media_from_path
from .pipeline import PipelineOptions, run_pipeline

DEFAULT_HOST = "127.0.0.1"


def _fail(message: str) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _fail_domain(exc: MuseBridgeError) -> NoReturn:
    stage = getattr(exc, "stage", None)
    if stage:
        click.echo(f"error in stage {stage}: {exc}", err=True)
    else:
        click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _load_config(config_path: Optional[str]) -> AppConfig:
    if config_path is None:
        return AppConfig()
    path = Path(config_path)
    if not path.is_file():
        _fail(f"config file not found: {path}")
    try:
        return load_config(path)
    except (ValueError, OSError) as exc:
        _fail(f"invalid config {path}: {exc}")


def _check_port_free(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError as exc:
        probe.close()
        _fail(f"cannot bind {host}:{port}: {exc}")
    probe.close()


@click.group()
@click.version_option(package_name="musebridge")
def main() -> None:
    """Visual-to-music generation pipeline, evaluation harness, and job service."""


@main.command()
@click.option("--input", "input_path", required=True, help="Image file, frame directory, zip archive, or media file for the external decoder.")
@click.option("--out", "out_path", required=True, help="Output WAV path.")
@click.option("--trace", "trace_path", default=None, help="Also write the canonical trace here.")
@click.option("--config", "config_path", default=None, help="JSON config file (defaults to in-process mocks).")
@click.option("--prompt", "user_prompt", default=None, help="Optional steering text added to the bridge call.")
@click.option("--duration", type=float, default=None, help="Requested clip length in seconds.")
@click.option("--frames", type=int, default=None, help="Frames to sample from video inputs.")
@click.option("--bypass-bridge", is_flag=True, help="Feed the caption to the music backend verbatim.")
def generate(
    input_path: str,
    out_path: str,
    trace_path: Optional[str],
    config_path: Optional[str],
    user_prompt: Optional[str],
    duration: Optional[float],
    frames: Optional[int],
    bypass_bridge: bool,
) -> None:
    """Run one generation end to end and write the audio (and trace)."""
    config = _load_config(config_path)
    source = Path(input_path)
    if not source.exists():
        _fail(f"input path not found: {source}")
    try:
        media = media_from_path(
            source,
            user_prompt=user_prompt,
            requested_duration=duration if duration is not None else config.default_duration_s,
            frame_count=frames if frames is not None else config.frame_count,
            decoder_template=config.decoder_template,
        )
        suite = config.build_suite()
        options = PipelineOptions(
            frame_count=frames if frames is not None else config.frame_count,
            bypass_bridge=bypass_bridge,
        )
        result = run_pipeline(media, suite, options)
    except MuseBridgeError as exc:
        _fail_domain(exc)
    Path(out_path).write_bytes(encode_wav(result.audio))
    caption_text = ""
    for stage in result.trace.stages:
        if stage.stage in ("caption", "aggregate"):
            caption_text = stage.output_text or ""
    click.echo(f"caption: {caption_text}")
    click.echo(f"music prompt: {result.music_prompt.text}")
    click.echo(f"wrote {out_path}")
    if trace_path:
        result.trace.write(trace_path)
        click.echo(f"wrote {trace_path}")


@main.command("eval")
@click.option("--manifest", "manifest_path", required=True, help="JSONL manifest of media/reference/generated paths.")
@click.option("--metrics", default="fad,kl,ibrank", help="Comma-separated subset of fad, kl, ibrank.")
@click.option("--out", "out_path", default="report", help="Report base path; writes <base>.json (and .md).")
@click.option("--format", "report_format", type=click.Choice(["json", "md"]), default="json", help="md additionally writes the markdown table.")
@click.option("--embeddings", "embeddings_dir", default=None, help="Directory of precomputed embedding files (media.emb, reference.emb, <system>.emb).")
@click.option("--config", "config_path", default=None, help="JSON config file (defaults to in-process mocks).")
def eval_command(
    manifest_path: str,
    metrics: str,
    out_path: str,
    report_format: str,
    embeddings_dir: Optional[str],
    config_path: Optional[str],
) -> None:
    """Compute FAD/KL/IB-Rank over a manifest and write the report."""
    from .evaluation import FileEmbeddingSource, load_manifest, run_eval, write_report

    config = _load_config(config_path)
    try:
        manifest = load_manifest(manifest_path)
        metric_names = [m for m in metrics.split(",") if m.strip()]
        source = None
        if embeddings_dir is not None:
            source = FileEmbeddingSource(embeddings_dir, manifest)
        report = run_eval(
            manifest,
            metric_names,
            backends=config.build_suite(),
            embeddings=source,
        )
    except ManifestError as exc:
        _fail(f"manifest invalid: {exc}")
    except MuseBridgeError as exc:
        _fail_domain(exc)
    written = write_report(report, out_path, markdown=report_format == "md")
    for path in written:
        click.echo(f"wrote {path}")


@main.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default=DEFAULT_HOST, show_default=True)
@click.option("--config", "config_path", default=None, help="JSON config file (defaults to in-process mocks).")
@click.option("--workspace", "workspace_dir", default=None, help="Override the job workspace directory.")
def serve(port: int, host: str, config_path: Optional[str], workspace_dir: Optional[str]) -> None:
    """Host the job service."""
    from dataclasses import replace

    from .service import create_app

    config = _load_config(config_path)
    if workspace_dir is not None:
        config = replace(config, workspace_dir=Path(workspace_dir))
    _check_port_free(host, port)
    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("mock-backends")
@click.option("--port", type=int, default=9090, show_default=True)
@click.option("--host", default=DEFAULT_HOST, show_default=True)
def mock_backends(port: int, host: str) -> None:
    """Host the five deterministic mock inference routes."""
    from .backends.server import create_mock_app

    _check_port_free(host, port)
    uvicorn.run(create_mock_app(), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
