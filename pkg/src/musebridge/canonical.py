"""Canonical serialization and content hashing.

Trace files, reports, and request digests all go through these helpers so
byte-equality between two serializations means value-equality.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(value: Any) -> str:
    """Serialize to the canonical textual form.

    Sorted keys, minimal separators, no ASCII escaping, NaN/Infinity rejected.
    Floats render as their shortest round-trip representation, which is fixed
    for IEEE-754 doubles.
    """
    return json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonical_json_bytes(value: Any) -> bytes:
    return canonical_json(value).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def text_digest(text: str) -> str:
    return sha256_hex(text.encode("utf-8"))


def hex8(digest: str) -> str:
    """First 8 hex characters of a digest, used in mock outputs and ids."""
    return digest[:8]
