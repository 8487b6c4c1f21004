"""Shared test fixtures: tiny deterministic backends for tree-search tests."""

from __future__ import annotations

import itertools

import numpy as np

from textmotion.formats import PLAN_JOINT_FIELDS
from textmotion.pose import Keyframe, KeyframePlan

# pelvis-x codes for (depth, candidate); all well inside the workspace bounds
SEGMENT_CODES = {
    (0, 0): 0.5,
    (0, 1): 0.6,
    (1, 0): 1.0,
    (1, 1): 1.1,
    (2, 0): 1.5,
    (2, 1): 1.6,
}
CODE_TO_CHOICE = {v: k for k, v in SEGMENT_CODES.items()}


def coded_keyframe(depth: int, candidate: int) -> dict:
    value = SEGMENT_CODES[(depth, candidate)]
    return {name: [value, value, value] for name in PLAN_JOINT_FIELDS}


class TwoChoiceProposer:
    """Deterministic 2-ary proposer over a depth-3 plan space (K=3, K_s=1).

    Each distinct prefix owns a call counter: its c-th expansion returns
    candidate c % 2 as the next segment, so every node enumerates exactly
    two distinct children. Completion segments beyond the first follow a
    global Gray-code counter, spreading rollout coverage across plans.
    """

    def __init__(self, depth: int = 3):
        self.depth = depth
        self.counters: dict[tuple, itertools.count] = {}
        self.calls = 0

    def propose(self, payload: dict) -> dict:
        prefix = payload.get("prefix") or []
        key = tuple(round(f["pelvis"][0], 1) for f in prefix)
        counter = self.counters.setdefault(key, itertools.count())
        c = next(counter)
        g = self.calls
        self.calls += 1
        frames = []
        for i, d in enumerate(range(len(prefix), self.depth)):
            if i == 0:
                candidate = c & 1
            else:
                gray = g ^ (g >> 1)
                candidate = (gray >> (i - 1)) & 1
            frames.append(coded_keyframe(d, candidate))
        return {"mode": "absolute", "frames": frames}


def decode_plan_choices(plan: KeyframePlan) -> tuple[int, ...]:
    choices = []
    for frame in plan.frames:
        code = round(float(frame.key_positions[0, 0]), 1)
        choices.append(CODE_TO_CHOICE[code][1])
    return tuple(choices)


def additive_plan_scorer(seed: int, depth: int = 3, low: float = 40.0, high: float = 60.0):
    """Per-seed random segment values; a plan scores the mean of its segments.

    Returns (evaluate_plan, brute_force_best) where brute_force_best is
    the exhaustive argmax over all 2^depth candidate sequences.
    """
    rng = np.random.default_rng(seed)
    table = {
        (d, c): float(rng.uniform(low, high)) for d in range(depth) for c in (0, 1)
    }

    def evaluate(plan: KeyframePlan) -> float:
        values = []
        for frame in plan.frames:
            code = round(float(frame.key_positions[0, 0]), 1)
            values.append(table[CODE_TO_CHOICE[code]])
        return float(np.mean(values))

    best_choice, best_value = None, -np.inf
    for bits in itertools.product((0, 1), repeat=depth):
        value = float(np.mean([table[(d, c)] for d, c in enumerate(bits)]))
        if value > best_value:
            best_choice, best_value = bits, value
    return evaluate, best_choice, best_value


def rest_keyframe() -> Keyframe:
    return Keyframe(np.zeros((5, 3)), "absolute")
