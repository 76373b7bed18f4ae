"""Report emission: canonical JSON record plus a human-readable markdown table."""

from __future__ import annotations

from pathlib import Path

from ..canonical import canonical_json
from .types import EvalReport

_COLUMNS = {
    "fad": ("FAD↓", min),
    "kl": ("KL↓", min),
    "ib_rank": ("IB Rank↑", max),
}


def emit_json(report: EvalReport) -> str:
    return canonical_json(report.to_dict())


def emit_markdown(report: EvalReport) -> str:
    """Markdown table, one row per system, best value per column bolded.

    Column direction follows the metric: lower is better for FAD and KL,
    higher for IB Rank. Ties are all bolded.
    """
    headers = ["Model"] + [_COLUMNS[m][0] for m in report.metrics]
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join(" --- " for _ in headers) + "|",
    ]
    best = {}
    for metric in report.metrics:
        pick = _COLUMNS[metric][1]
        best[metric] = pick(values[metric] for values in report.systems.values())
    for system in report.systems:
        cells = [system]
        for metric in report.metrics:
            value = report.systems[system][metric]
            text = f"{value:.3f}"
            if value == best[metric]:
                text = f"**{text}**"
            cells.append(text)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_report(report: EvalReport, format: str = "json") -> str:
    if format == "json":
        return emit_json(report)
    if format in ("markdown", "md"):
        return emit_markdown(report)
    raise ValueError(f"unknown report format {format!r}")


def write_report(report: EvalReport, base_path: Path | str, *, markdown: bool = False) -> list[Path]:
    """Write <base>.json (always) and <base>.md (opt-in); returns written paths."""
    base = Path(base_path)
    if base.suffix in (".json", ".md"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    json_path = base.with_suffix(".json")
    json_path.write_text(emit_json(report), encoding="utf-8")
    written.append(json_path)
    if markdown:
        md_path = base.with_suffix(".md")
        md_path.write_text(emit_markdown(report), encoding="utf-8")
        written.append(md_path)
    return written
