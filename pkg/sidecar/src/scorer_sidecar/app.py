"""FastAPI service exposing POST /propose, /score, /judge and GET /healthz.

Incoming requests are validated against the shared JSON schemas; so are
the service's own responses before they leave (fixture replays are sent
byte for byte after the check). Upstream model failures map to 502 with a
structured body, unusable model output to 422 after internal retries.
"""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path

import jsonschema
from fastapi import FastAPI, Request, Response

from .config import ConfigurationError, SidecarConfig, config_from_env, default_schema_dir
from .fixtures import FixtureStore
from .live import BadModelOutput, UpstreamError, judge_live, propose_live, score_live

log = logging.getLogger("scorer_sidecar")


def _load_schemas(schema_dir: Path) -> dict[str, jsonschema.Draft202012Validator]:
    validators = {}
    for name in ("propose", "score", "judge"):
        for kind in ("request", "response"):
            path = schema_dir / f"{name}_{kind}.schema.json"
            validators[f"{name}_{kind}"] = jsonschema.Draft202012Validator(
                json.loads(path.read_text())
            )
    return validators


def _error(status: int, kind: str, detail: str) -> Response:
    body = json.dumps({"error": kind, "detail": detail}, sort_keys=True)
    return Response(content=body, status_code=status, media_type="application/json")


def create_app(config: SidecarConfig | None = None) -> FastAPI:
    config = config or config_from_env()
    schema_dir = config.schema_dir or default_schema_dir()
    if schema_dir is None:
        raise ConfigurationError("cannot locate the shared schema directory")
    config.validate()
    validators = _load_schemas(schema_dir)
    fixtures = FixtureStore(config.fixtures_dir) if config.mode == "fixtures" else None

    app = FastAPI(title="textmotion scorer sidecar", version="0.1.0")
    live_handlers = {
        "propose": lambda req: propose_live(config.llm, req, config.timeout_s),
        "score": lambda req: score_live(config.embedder, req, config.timeout_s),
        "judge": lambda req: judge_live(config.vlm, req, config.timeout_s),
    }

    async def handle(name: str, request: Request) -> Response:
        if name not in config.endpoints:
            return _error(404, "disabled", f"endpoint /{name} is not enabled")
        try:
            doc = await request.json()
        except json.JSONDecodeError:
            return _error(422, "bad_request", "body is not valid JSON")
        try:
            validators[f"{name}_request"].validate(doc)
        except jsonschema.ValidationError as exc:
            return _error(422, "bad_request", exc.message)
        if "images" in doc and len(doc["images"]) > config.max_images:
            return _error(422, "bad_request", f"more than {config.max_images} images")

        if fixtures is not None:
            raw = fixtures.lookup(name, doc)
            if raw is None:
                return _error(404, "no_fixture", f"no recorded response for this /{name} request")
            try:
                validators[f"{name}_response"].validate(json.loads(raw))
            except (json.JSONDecodeError, jsonschema.ValidationError) as exc:
                return _error(500, "bad_fixture", str(exc))
            return Response(content=raw, media_type="application/json")

        try:
            out = live_handlers[name](doc)
        except UpstreamError as exc:
            return _error(502, "upstream", str(exc))
        except BadModelOutput as exc:
            return _error(422, "model_output", str(exc))
        try:
            validators[f"{name}_response"].validate(out)
        except jsonschema.ValidationError as exc:
            return _error(500, "invalid_response", exc.message)
        return Response(
            content=json.dumps(out, sort_keys=True), media_type="application/json"
        )

    @app.post("/propose")
    async def propose(request: Request) -> Response:  # noqa: D103
        return await handle("propose", request)

    @app.post("/score")
    async def score(request: Request) -> Response:  # noqa: D103
        return await handle("score", request)

    @app.post("/judge")
    async def judge(request: Request) -> Response:  # noqa: D103
        return await handle("judge", request)

    @app.get("/healthz")
    async def healthz() -> dict:  # noqa: D103
        return {"status": "ok", "mode": config.mode, "endpoints": list(config.endpoints)}

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="textmotion-sidecar")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8800)
    parser.add_argument("--mode", choices=("fixtures", "live"), default=None)
    parser.add_argument("--fixtures-dir", default=None)
    parser.add_argument("--schema-dir", default=None)
    args = parser.parse_args(argv)

    overrides = {}
    if args.mode:
        overrides["mode"] = args.mode
    if args.fixtures_dir:
        overrides["fixtures_dir"] = Path(args.fixtures_dir)
    if args.schema_dir:
        overrides["schema_dir"] = Path(args.schema_dir)
    config = config_from_env(**overrides)

    import uvicorn

    logging.basicConfig(level=logging.INFO)
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
