"""Sidecar configuration, sourced from environment variables and flags.

Two modes:

- ``fixtures`` (default): every endpoint replays recorded responses from
  the fixture directory, byte for byte. No credentials, no network.
- ``live``: endpoints call hosted models through OpenAI-compatible APIs.
  Each enabled endpoint must have its credentials set or the service
  refuses to start.

Environment variables::

    SIDECAR_MODE            fixtures | live
    SIDECAR_FIXTURES_DIR    path to the fixture directory
    SIDECAR_ENDPOINTS       comma list from {propose,score,judge}; default all
    SIDECAR_SCHEMA_DIR      path to the shared *.schema.json files
    SIDECAR_TIMEOUT_S       upstream request timeout (default 60)
    SIDECAR_MAX_IMAGES      max images accepted per request (default 64)

    SIDECAR_LLM_BASE_URL / SIDECAR_LLM_API_KEY / SIDECAR_LLM_MODEL
    SIDECAR_EMBED_BASE_URL / SIDECAR_EMBED_API_KEY / SIDECAR_EMBED_MODEL
    SIDECAR_VLM_BASE_URL / SIDECAR_VLM_API_KEY / SIDECAR_VLM_MODEL
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

ALL_ENDPOINTS = ("propose", "score", "judge")


class ConfigurationError(RuntimeError):
    pass


@dataclass
class ModelEndpoint:
    base_url: str = ""
    api_key: str = ""
    model: str = ""

    def ready(self) -> bool:
        return bool(self.base_url and self.api_key and self.model)


@dataclass
class SidecarConfig:
    mode: str = "fixtures"
    fixtures_dir: Path = field(default_factory=lambda: Path("fixtures"))
    schema_dir: Path | None = None
    endpoints: tuple[str, ...] = ALL_ENDPOINTS
    timeout_s: float = 60.0
    max_images: int = 64
    llm: ModelEndpoint = field(default_factory=ModelEndpoint)
    embedder: ModelEndpoint = field(default_factory=ModelEndpoint)
    vlm: ModelEndpoint = field(default_factory=ModelEndpoint)

    def validate(self) -> None:
        if self.mode not in ("fixtures", "live"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        unknown = set(self.endpoints) - set(ALL_ENDPOINTS)
        if unknown:
            raise ConfigurationError(f"unknown endpoints: {sorted(unknown)}")
        if self.mode == "fixtures" and not self.fixtures_dir.is_dir():
            raise ConfigurationError(f"fixture directory missing: {self.fixtures_dir}")
        if self.mode == "live":
            required = {"propose": self.llm, "score": self.embedder, "judge": self.vlm}
            for name in self.endpoints:
                if not required[name].ready():
                    raise ConfigurationError(
                        f"endpoint /{name} enabled but its model credentials are not set"
                    )


def _endpoint_from_env(prefix: str) -> ModelEndpoint:
    return ModelEndpoint(
        base_url=os.environ.get(f"{prefix}_BASE_URL", ""),
        api_key=os.environ.get(f"{prefix}_API_KEY", ""),
        model=os.environ.get(f"{prefix}_MODEL", ""),
    )


def config_from_env(**overrides) -> SidecarConfig:
    endpoints = os.environ.get("SIDECAR_ENDPOINTS", ",".join(ALL_ENDPOINTS))
    config = SidecarConfig(
        mode=os.environ.get("SIDECAR_MODE", "fixtures"),
        fixtures_dir=Path(os.environ.get("SIDECAR_FIXTURES_DIR", "fixtures")),
        schema_dir=(
            Path(os.environ["SIDECAR_SCHEMA_DIR"]) if "SIDECAR_SCHEMA_DIR" in os.environ else None
        ),
        endpoints=tuple(e.strip() for e in endpoints.split(",") if e.strip()),
        timeout_s=float(os.environ.get("SIDECAR_TIMEOUT_S", "60")),
        max_images=int(os.environ.get("SIDECAR_MAX_IMAGES", "64")),
        llm=_endpoint_from_env("SIDECAR_LLM"),
        embedder=_endpoint_from_env("SIDECAR_EMBED"),
        vlm=_endpoint_from_env("SIDECAR_VLM"),
    )
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


def default_schema_dir() -> Path | None:
    """Locate the shared schema files when running from the repo."""
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "docs" / "schemas"
        if candidate.is_dir():
            return candidate
    return None
