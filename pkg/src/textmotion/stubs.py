"""Deterministic in-process backends speaking the scorer-protocol wire format.

These let the whole pipeline and test suite run with no network and no
models: a playbook proposer (prompt hash -> parametric keyframe template
with seeded jitter, so tree search actually branches), an image scorer
measuring pixel distance to a target rendering, and a fixed-value judge.
All randomness flows from the constructor seed, so runs are bit-reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .kinematics import extract_key_positions, standing_pose
from .pose import Keyframe
from .protocol import decode_image
from .render import CameraSpec, decode_png, render_frame_png
from .skeleton import Skeleton, default_skeleton

PLAYBOOK = ("stand", "raise_arm", "squat", "step")


def _prompt_template(prompt: str) -> str:
    lowered = prompt.lower()
    for name in PLAYBOOK:
        if name.replace("_", " ") in lowered or name.split("_")[-1] in lowered:
            return name
    digest = int(hashlib.sha256(prompt.encode()).hexdigest(), 16)
    return PLAYBOOK[digest % len(PLAYBOOK)]


def _template_trajectory(name: str, initial: np.ndarray, length: int) -> np.ndarray:
    """(length, 5, 3) absolute key positions for one playbook action."""
    out = np.repeat(initial[None, :, :], length, axis=0)
    for i in range(length):
        t = 1.0 if length == 1 else i / (length - 1)
        if name == "stand":
            continue
        if name == "raise_arm":
            # arc the left wrist up and inward, staying within arm reach
            out[i, 1, 0] -= 0.40 * t
            out[i, 1, 1] += 0.42 * t
        elif name == "squat":
            dip = 0.25 * np.sin(np.pi * t)
            out[i, 0, 1] -= dip               # pelvis down and back up
            out[i, 1, 1] -= dip
            out[i, 2, 1] -= dip
        elif name == "step":
            advance = 0.4 * t
            out[i, 0, 2] += advance
            out[i, 1, 2] += advance
            out[i, 2, 2] += advance
            out[i, 3, 2] += 0.4 * min(1.0, 2.0 * t)      # left foot leads
            out[i, 4, 2] += 0.4 * max(0.0, 2.0 * t - 1)  # right foot follows
    return out


class StubProposer:
    """Playbook-driven /propose backend returning delta completions."""

    def __init__(self, seed: int = 0, jitter: float = 0.02, skeleton: Skeleton | None = None):
        self.rng = np.random.default_rng(seed)
        self.jitter = jitter
        skeleton = skeleton or default_skeleton()
        self._fallback_initial = extract_key_positions(
            skeleton, standing_pose(skeleton)
        ).key_positions

    def propose(self, payload: dict) -> dict:
        from .formats import PLAN_JOINT_FIELDS

        prompt = payload.get("prompt", "")
        target_length = int(payload["target_length"])
        prefix = payload.get("prefix") or []
        initial_doc = payload.get("initial")
        if initial_doc is not None:
            initial = np.array([initial_doc[n] for n in PLAN_JOINT_FIELDS], dtype=float)
        else:
            initial = self._fallback_initial

        name = _prompt_template(prompt)
        trajectory = _template_trajectory(name, initial, target_length)
        if self.jitter:
            trajectory = trajectory + self.rng.normal(
                scale=self.jitter, size=trajectory.shape
            )

        anchored = np.concatenate([initial[None], trajectory], axis=0)
        deltas = np.diff(anchored, axis=0)[len(prefix) :]
        frames = [
            {n: [float(v) for v in row[i]] for i, n in enumerate(PLAN_JOINT_FIELDS)}
            for row in deltas
        ]
        return {
            "mode": "delta",
            "frames": frames,
            "rationale": f"playbook template '{name}'",
        }


class TemplateImageScorer:
    """/score backend: pixel MSE against a target rendering, mapped to [0, 100].

    A perfect pixel match scores 100; the farthest possible image scores 0.
    Gives tree search a real optimization signal without any model.
    """

    def __init__(self, target_png: bytes):
        self.target = decode_png(target_png).astype(float)

    def score(self, payload: dict) -> dict:
        images = payload.get("images") or []
        if not images:
            raise ValueError("score request carries no image")
        values = []
        for b64 in images:
            img = decode_png(decode_image(b64)).astype(float)
            if img.shape != self.target.shape:
                raise ValueError("image size differs from the scorer template")
            mse = float(np.mean((img - self.target) ** 2))
            values.append(100.0 * (1.0 - mse / (255.0**2)))
        return {"score": float(np.mean(values))}


class ConstantScorer:
    def __init__(self, value: float):
        self.value = float(value)

    def score(self, payload: dict) -> dict:
        return {"score": self.value}


class SequenceScorer:
    """Returns scripted values in order, cycling; for protocol tests."""

    def __init__(self, values):
        self.values = list(values)
        self.calls = 0

    def score(self, payload: dict) -> dict:
        value = self.values[self.calls % len(self.values)]
        self.calls += 1
        return {"score": float(value)}


class StubJudge:
    """Fixed-value /judge backend, optionally with seeded jitter."""

    def __init__(self, semantic: float = 3.5, naturalness: float = 3.0, jitter: float = 0.0, seed: int = 0):
        self.semantic = float(semantic)
        self.naturalness = float(naturalness)
        self.jitter = float(jitter)
        self.rng = np.random.default_rng(seed)

    def judge(self, payload: dict) -> dict:
        weights = payload.get("weights") or {}
        ws = float(weights.get("semantic", 0.6))
        wn = float(weights.get("naturalness", 0.4))
        semantic, naturalness = self.semantic, self.naturalness
        if self.jitter:
            semantic = float(np.clip(semantic + self.rng.normal(scale=self.jitter), 0.0, 5.0))
            naturalness = float(
                np.clip(naturalness + self.rng.normal(scale=self.jitter), 0.0, 5.0)
            )
        return {
            "semantic": semantic,
            "naturalness": naturalness,
            "weighted": ws * semantic + wn * naturalness,
        }


class StubBackend:
    """All three roles in one object, for pipeline runs under stubs."""

    def __init__(
        self,
        seed: int = 0,
        skeleton: Skeleton | None = None,
        camera: CameraSpec | None = None,
        judge_semantic: float = 3.5,
        judge_naturalness: float = 3.0,
    ):
        skeleton = skeleton or default_skeleton()
        camera = camera or CameraSpec()
        self.proposer = StubProposer(seed=seed, skeleton=skeleton)
        target = render_frame_png(skeleton, standing_pose(skeleton), camera)
        self.scorer = TemplateImageScorer(target)
        self.judger = StubJudge(judge_semantic, judge_naturalness)

    def propose(self, payload: dict) -> dict:
        return self.proposer.propose(payload)

    def score(self, payload: dict) -> dict:
        return self.scorer.score(payload)

    def judge(self, payload: dict) -> dict:
        return self.judger.judge(payload)
