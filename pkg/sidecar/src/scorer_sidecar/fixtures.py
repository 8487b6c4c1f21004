"""Recorded-fixture replay: deterministic responses keyed by request hash.

A fixture file lives at ``<dir>/<endpoint>/<sha256(canonical request)>.json``
where the canonical form is JSON with sorted keys and compact separators.
An endpoint may also carry a ``default.json`` fallback for requests that
were never recorded. Responses replay byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def canonical_request(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def request_key(doc: dict) -> str:
    return hashlib.sha256(canonical_request(doc)).hexdigest()


class FixtureStore:
    def __init__(self, root: Path):
        self.root = Path(root)

    def lookup(self, endpoint: str, request: dict) -> bytes | None:
        exact = self.root / endpoint / f"{request_key(request)}.json"
        if exact.is_file():
            return exact.read_bytes()
        fallback = self.root / endpoint / "default.json"
        if fallback.is_file():
            return fallback.read_bytes()
        return None

    def record(self, endpoint: str, request: dict, response_bytes: bytes) -> Path:
        path = self.root / endpoint / f"{request_key(request)}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(response_bytes)
        return path
