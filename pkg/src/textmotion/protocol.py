"""Wire protocol and client for the three external model roles.

Three backends sit behind plain HTTP/1.1 + JSON: a keyframe proposer
(POST /propose), an image-text scorer (POST /score) and a motion judge
(POST /judge). Images travel as base64 PNG. The client validates every
response, converts delta keyframes to absolute ones, enforces workspace
bounds, and retries schema-invalid proposals with an error note before
failing closed. In-process stub backends (see stubs.py) speak the same
wire dictionaries, so the full pipeline runs with no network.

Backend URLs come from PROPOSER_URL / SCORER_URL / JUDGE_URL unless given
explicitly.
"""

from __future__ import annotations

import base64
import os
from dataclasses import dataclass

import numpy as np

from .formats import PLAN_JOINT_FIELDS
from .pose import Keyframe, KeyframePlan, plan_to_absolute

DEFAULT_WORKSPACE_BOUND = 5.0  # meters, per coordinate
DEFAULT_PROPOSE_RETRIES = 3
SCORE_MIN, SCORE_MAX = -100.0, 100.0
JUDGE_MIN, JUDGE_MAX = 0.0, 5.0
DEFAULT_SEMANTIC_WEIGHT = 0.6
DEFAULT_NATURALNESS_WEIGHT = 0.4
DEFAULT_JUDGE_REPEATS = 10


def default_prompt_template() -> str:
    """The bundled planning-prompt template (editable data file)."""
    from importlib import resources

    return (resources.files("textmotion.data") / "prompt_template.txt").read_text()


class ProtocolError(RuntimeError):
    """Base class for scorer-protocol failures."""


class BackendError(ProtocolError):
    """Transport-level failure talking to a backend."""


class SchemaError(ProtocolError):
    """Backend answered, but the payload does not satisfy the contract."""


@dataclass(frozen=True)
class ProposalRequest:
    prompt: str
    prefix: KeyframePlan | None
    target_length: int
    segment_length: int
    initial: Keyframe | None = None
    template: str | None = None

    def __post_init__(self):
        if self.target_length < 1:
            raise ValueError("target_length must be positive")
        if self.prefix is not None and len(self.prefix) > self.target_length:
            raise ValueError("prefix longer than target_length")


@dataclass(frozen=True)
class ProposalResponse:
    completion: tuple[Keyframe, ...]  # absolute, validated
    rationale: str | None = None


@dataclass(frozen=True)
class JudgeResponse:
    semantic: float
    naturalness: float
    weighted: float


# -- wire encoding ------------------------------------------------------------

def _keyframe_to_json(frame: Keyframe) -> dict:
    return {
        name: [float(v) for v in frame.key_positions[i]]
        for i, name in enumerate(PLAN_JOINT_FIELDS)
    }


def _keyframe_from_json(doc: dict, mode: str) -> Keyframe:
    try:
        pos = np.array([doc[name] for name in PLAN_JOINT_FIELDS], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed keyframe entry: {exc}") from exc
    if pos.shape != (5, 3):
        raise SchemaError(f"keyframe entries must be five 3-vectors, got shape {pos.shape}")
    return Keyframe(pos, mode)


def proposal_request_to_json(req: ProposalRequest, retry_note: str | None = None) -> dict:
    doc: dict = {
        "prompt": req.prompt,
        "target_length": req.target_length,
        "segment_length": req.segment_length,
        "prefix": [_keyframe_to_json(f) for f in (req.prefix.frames if req.prefix else ())],
        "initial": _keyframe_to_json(req.initial) if req.initial is not None else None,
        "template": req.template,
    }
    if retry_note is not None:
        doc["retry_note"] = retry_note
    return doc


def encode_image(png_bytes: bytes) -> str:
    return base64.b64encode(png_bytes).decode("ascii")


def decode_image(b64: str) -> bytes:
    return base64.b64decode(b64.encode("ascii"))


# -- response validation ------------------------------------------------------

def parse_proposal_response(
    doc: dict,
    req: ProposalRequest,
    workspace_bound: float = DEFAULT_WORKSPACE_BOUND,
) -> ProposalResponse:
    """Validate a raw /propose payload and resolve it to absolute keyframes."""
    if not isinstance(doc, dict) or "frames" not in doc:
        raise SchemaError("proposal response must be an object with a frames array")
    mode = doc.get("mode", "delta")
    if mode not in ("delta", "absolute"):
        raise SchemaError(f"unknown proposal mode {mode!r}")
    prefix_len = len(req.prefix) if req.prefix else 0
    expected = req.target_length - prefix_len
    frames_doc = doc["frames"]
    if not isinstance(frames_doc, list) or len(frames_doc) != expected:
        got = len(frames_doc) if isinstance(frames_doc, list) else "non-list"
        raise SchemaError(f"completion must hold exactly {expected} frames, got {got}")

    frames = tuple(_keyframe_from_json(f, mode) for f in frames_doc)
    if mode == "delta":
        if prefix_len:
            anchor = req.prefix.frames[-1]
        elif req.initial is not None:
            anchor = req.initial
        else:
            raise SchemaError("delta completion with empty prefix needs an initial anchor")
        plan = plan_to_absolute(
            KeyframePlan(frames, req.prompt, req.segment_length), anchor
        )
        frames = plan.frames
    for i, frame in enumerate(frames):
        if np.abs(frame.key_positions).max() > workspace_bound:
            raise SchemaError(
                f"completion frame {i} leaves the +/-{workspace_bound} m workspace"
            )
    return ProposalResponse(frames, doc.get("rationale"))


# -- client operations --------------------------------------------------------

def propose(
    backend,
    req: ProposalRequest,
    retries: int = DEFAULT_PROPOSE_RETRIES,
    workspace_bound: float = DEFAULT_WORKSPACE_BOUND,
) -> ProposalResponse:
    """Request a completion, validating and retrying malformed output."""
    last_error: Exception | None = None
    note = None
    for _ in range(max(1, retries)):
        raw = backend.propose(proposal_request_to_json(req, retry_note=note))
        try:
            return parse_proposal_response(raw, req, workspace_bound)
        except SchemaError as exc:
            last_error = exc
            note = f"previous output rejected: {exc}"
    raise SchemaError(f"proposal invalid after {retries} attempts: {last_error}")


def score_frames(backend, prompt: str, images: list[bytes]) -> float:
    """Mean backend score over the images, one request per image.

    The per-sequence averaging happens here on the client so backends only
    ever score a single image.
    """
    if not images:
        raise ValueError("need at least one image to score")
    scores = []
    for png in images:
        raw = backend.score({"prompt": prompt, "images": [encode_image(png)]})
        try:
            value = float(raw["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed score response: {exc}") from exc
        if not SCORE_MIN <= value <= SCORE_MAX:
            raise SchemaError(f"score {value} outside [{SCORE_MIN}, {SCORE_MAX}]")
        scores.append(value)
    return float(np.mean(scores))


def judge_motion(
    backend,
    prompt: str,
    frames: list[bytes],
    semantic_weight: float = DEFAULT_SEMANTIC_WEIGHT,
    naturalness_weight: float = DEFAULT_NATURALNESS_WEIGHT,
    repeats: int = DEFAULT_JUDGE_REPEATS,
) -> JudgeResponse:
    """Average of `repeats` weighted judge calls on the rendered frames."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    request = {
        "prompt": prompt,
        "images": [encode_image(png) for png in frames],
        "weights": {"semantic": semantic_weight, "naturalness": naturalness_weight},
    }
    semantics, naturals, weighteds = [], [], []
    for _ in range(repeats):
        raw = backend.judge(request)
        try:
            semantic = float(raw["semantic"])
            natural = float(raw["naturalness"])
            weighted = float(raw["weighted"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed judge response: {exc}") from exc
        for v in (semantic, natural):
            if not JUDGE_MIN <= v <= JUDGE_MAX:
                raise SchemaError(f"judge axis value {v} outside [0, 5]")
        expected = semantic_weight * semantic + naturalness_weight * natural
        if abs(weighted - expected) > 1e-9:
            raise SchemaError("judge weighted score does not match its axes")
        semantics.append(semantic)
        naturals.append(natural)
        weighteds.append(weighted)
    return JudgeResponse(
        float(np.mean(semantics)), float(np.mean(naturals)), float(np.mean(weighteds))
    )


# -- HTTP backends ------------------------------------------------------------

class HttpBackend:
    """JSON-over-HTTP backend; each role may live at a different base URL."""

    def __init__(
        self,
        proposer_url: str | None = None,
        scorer_url: str | None = None,
        judge_url: str | None = None,
        timeout: float = 60.0,
    ):
        self.proposer_url = proposer_url
        self.scorer_url = scorer_url
        self.judge_url = judge_url
        self.timeout = timeout

    def _post(self, base_url: str | None, endpoint: str, payload: dict) -> dict:
        if not base_url:
            raise BackendError(f"no URL configured for {endpoint}")
        import requests

        try:
            resp = requests.post(
                base_url.rstrip("/") + endpoint, json=payload, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendError(f"{endpoint} request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"{endpoint} returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise SchemaError(f"{endpoint} returned non-JSON body") from exc

    def propose(self, payload: dict) -> dict:
        return self._post(self.proposer_url, "/propose", payload)

    def score(self, payload: dict) -> dict:
        return self._post(self.scorer_url, "/score", payload)

    def judge(self, payload: dict) -> dict:
        return self._post(self.judge_url, "/judge", payload)


def backend_from_env(**overrides) -> HttpBackend:
    return HttpBackend(
        proposer_url=overrides.get("proposer_url") or os.environ.get("PROPOSER_URL"),
        scorer_url=overrides.get("scorer_url") or os.environ.get("SCORER_URL"),
        judge_url=overrides.get("judge_url") or os.environ.get("JUDGE_URL"),
    )
