"""Canonical JSON encoding and digests.

Every machine-readable artifact (analysis reports, audit reports,
certifications, store files) goes through :func:`canonical_json` so that
identical logical state always produces byte-identical output.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(value: Any) -> str:
    """Serialize ``value`` with sorted keys and no insignificant whitespace."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(value: Any) -> bytes:
    return (canonical_json(value) + "\n").encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def document_digest(value: Any) -> str:
    """SHA-256 (lowercase hex) of the canonical rendering of ``value``."""
    return sha256_hex(canonical_bytes(value))
