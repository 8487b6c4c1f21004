"""Live-mode clients: hosted models behind OpenAI-compatible HTTP APIs.

- /propose fills the request's planning template (or a minimal fallback)
  and asks a chat-completions model for keyframe JSON, retrying once with
  the parse error before giving up.
- /score embeds the prompt and each image through a multimodal embeddings
  endpoint and returns cosine similarity scaled by 100.
- /judge asks a vision chat model twice (semantic alignment, naturalness),
  parses a 0-5 value from each reply, and combines with the requested
  weights.

Which concrete models sit behind these calls is deployment configuration;
the protocol is the contract.
"""

from __future__ import annotations

import json
import math
import re
from importlib import resources

import requests

from .config import ModelEndpoint


class UpstreamError(RuntimeError):
    """The hosted model could not be reached or answered with an error."""


class BadModelOutput(RuntimeError):
    """The hosted model answered, but its output defeated the parser."""


def _prompt_asset(name: str) -> str:
    return (resources.files("scorer_sidecar.prompts") / name).read_text()


def _post(endpoint: ModelEndpoint, path: str, payload: dict, timeout: float) -> dict:
    try:
        resp = requests.post(
            endpoint.base_url.rstrip("/") + path,
            json=payload,
            headers={"Authorization": f"Bearer {endpoint.api_key}"},
            timeout=timeout,
        )
    except requests.RequestException as exc:
        raise UpstreamError(f"upstream request failed: {exc}") from exc
    if resp.status_code != 200:
        raise UpstreamError(f"upstream returned HTTP {resp.status_code}: {resp.text[:300]}")
    try:
        return resp.json()
    except ValueError as exc:
        raise UpstreamError("upstream returned a non-JSON body") from exc


def _chat(endpoint: ModelEndpoint, messages: list[dict], timeout: float) -> str:
    doc = _post(
        endpoint,
        "/chat/completions",
        {"model": endpoint.model, "messages": messages, "temperature": 0.7},
        timeout,
    )
    try:
        return doc["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise UpstreamError(f"unexpected chat response shape: {exc}") from exc


def _extract_json(text: str) -> dict:
    """Pull the first JSON object out of a model reply (code fences allowed)."""
    fenced = re.search(r"```(?:json)?\s*(\{.*?\})\s*```", text, re.DOTALL)
    candidate = fenced.group(1) if fenced else None
    if candidate is None:
        start = text.find("{")
        end = text.rfind("}")
        if start < 0 or end <= start:
            raise BadModelOutput("no JSON object in the model reply")
        candidate = text[start : end + 1]
    try:
        return json.loads(candidate)
    except json.JSONDecodeError as exc:
        raise BadModelOutput(f"model reply is not valid JSON: {exc}") from exc


def propose_live(endpoint: ModelEndpoint, request: dict, timeout: float) -> dict:
    prefix_len = len(request.get("prefix") or [])
    remaining = request["target_length"] - prefix_len
    template = request.get("template") or _prompt_asset("propose_fallback.txt")
    user = template.format(
        prompt=request["prompt"],
        skeleton_info="22-joint humanoid, pelvis root, Y-up, meters",
        initial_keyframe=json.dumps(request.get("initial")),
        remaining=remaining,
        target_length=request["target_length"],
        segment_length=request["segment_length"],
    )
    if prefix_len:
        user += "\n\nKeyframes planned so far (absolute positions):\n" + json.dumps(
            request["prefix"]
        )
    if request.get("retry_note"):
        user += f"\n\nNote: {request['retry_note']}"
    messages = [
        {"role": "system", "content": _prompt_asset("propose_system.txt")},
        {"role": "user", "content": user},
    ]

    last_error = None
    for _ in range(2):
        reply = _chat(endpoint, messages, timeout)
        try:
            doc = _extract_json(reply)
            frames = doc.get("frames")
            if not isinstance(frames, list) or len(frames) != remaining:
                raise BadModelOutput(
                    f"expected {remaining} frames, got "
                    f"{len(frames) if isinstance(frames, list) else 'none'}"
                )
            return {
                "mode": doc.get("mode", "delta"),
                "frames": frames,
                "rationale": doc.get("rationale"),
            }
        except BadModelOutput as exc:
            last_error = exc
            messages.append({"role": "assistant", "content": reply})
            messages.append(
                {"role": "user", "content": f"Your output was rejected: {exc}. Reply with JSON only."}
            )
    raise BadModelOutput(str(last_error))


def _embed(endpoint: ModelEndpoint, inputs: list[dict], timeout: float) -> list[list[float]]:
    doc = _post(
        endpoint,
        "/embeddings",
        {"model": endpoint.model, "input": inputs},
        timeout,
    )
    try:
        rows = sorted(doc["data"], key=lambda d: d["index"])
        return [row["embedding"] for row in rows]
    except (KeyError, TypeError) as exc:
        raise UpstreamError(f"unexpected embeddings response shape: {exc}") from exc


def _cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def score_live(endpoint: ModelEndpoint, request: dict, timeout: float) -> dict:
    inputs = [{"text": request["prompt"]}] + [
        {"image": b64} for b64 in request["images"]
    ]
    embeddings = _embed(endpoint, inputs, timeout)
    text_emb, image_embs = embeddings[0], embeddings[1:]
    values = [100.0 * _cosine(text_emb, e) for e in image_embs]
    score = sum(values) / len(values)
    return {"score": max(-100.0, min(100.0, score))}


def _parse_axis_score(reply: str) -> float:
    match = re.search(r"(?<![\d.])([0-5](?:\.\d+)?)(?![\d.])", reply)
    if not match:
        raise BadModelOutput(f"no 0-5 score in judge reply: {reply[:120]!r}")
    return max(0.0, min(5.0, float(match.group(1))))


def judge_live(endpoint: ModelEndpoint, request: dict, timeout: float) -> dict:
    def ask(prompt_name: str, **fmt) -> float:
        content = [{"type": "text", "text": _prompt_asset(prompt_name).format(**fmt)}]
        for b64 in request["images"]:
            content.append(
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}
            )
        reply = _chat(endpoint, [{"role": "user", "content": content}], timeout)
        return _parse_axis_score(reply)

    semantic = ask("judge_semantic.txt", prompt=request["prompt"])
    naturalness = ask("judge_naturalness.txt")
    weights = request["weights"]
    weighted = weights["semantic"] * semantic + weights["naturalness"] * naturalness
    return {"semantic": semantic, "naturalness": naturalness, "weighted": weighted}
