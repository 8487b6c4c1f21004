"""Monte Carlo tree search over keyframe segments.

The tree's nodes hold fixed-length keyframe segments; a root-to-node path
is a plan prefix. Each iteration selects a node by UCT, asks the proposer
backend to complete the prefix to the full plan length, stores the first
segment of that completion as a child, scores the complete plan (poses
solved by IK, rendered, scored frame-by-frame), and propagates the reward
up the path. Re-simulating an already-expanded terminal node updates only
visit counts, which decays its mean reward and pushes the search toward
unexplored branches.

Raw frame scores live in [-100, 100]; rewards inside the tree are
normalized to [0, 1] via (score/100 + 1)/2 so the exploration constant
keeps its usual scale. The returned best plan is the highest-scoring
complete rollout observed, reported with its raw score.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ik import IkConfig
from .kinematics import extract_key_positions, standing_pose
from .pose import Keyframe, KeyframePlan
from .protocol import ProposalRequest, propose
from .render import CameraSpec, render_frame_png
from .skeleton import Skeleton


@dataclass
class SearchConfig:
    iterations: int = 30
    exploration: float = 0.05
    segment_length: int = 2
    target_length: int = 8
    max_children_per_node: int = 3
    duplicate_tolerance: float = 1e-6

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.exploration < 0:
            raise ValueError("exploration must be non-negative")
        if self.target_length < 1 or self.segment_length < 1:
            raise ValueError("lengths must be positive")

    @property
    def max_depth(self) -> int:
        return math.ceil(self.target_length / self.segment_length)


@dataclass(eq=False)
class SearchNode:
    segment: tuple[Keyframe, ...]
    depth: int
    terminal: bool
    visit_count: int = 0
    total_reward: float = 0.0
    children: list["SearchNode"] = field(default_factory=list)
    completion: KeyframePlan | None = None  # full plan retained at expansion

    @property
    def mean_reward(self) -> float:
        if self.visit_count == 0:
            raise ValueError("mean reward undefined before the first visit")
        return self.total_reward / self.visit_count


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    simulations_run: int = 0
    cache_hits: int = 0
    ik_failures: int = 0
    duplicates_merged: int = 0


@dataclass
class SearchResult:
    best_plan: KeyframePlan
    best_score: float
    stats: SearchStats
    root: SearchNode = field(repr=False, default=None)


class SearchError(RuntimeError):
    """Search could not produce any complete plan; carries partial stats."""

    def __init__(self, message: str, stats: SearchStats):
        super().__init__(message)
        self.stats = stats


def uct_value(mean_reward: float, parent_visits: int, child_visits: int, alpha: float) -> float:
    if child_visits == 0:
        return math.inf
    return mean_reward + alpha * math.sqrt(
        2.0 * math.log(parent_visits) / child_visits
    )


def normalize_score(raw: float) -> float:
    """Map a raw [-100, 100] frame score into the [0, 1] reward range."""
    return (raw / 100.0 + 1.0) / 2.0


def select_leaf(
    root: SearchNode, alpha: float, max_children: int | None = None
) -> list[SearchNode]:
    """Walk down by UCT until reaching an expandable or terminal node.

    Unvisited children have infinite priority; ties go to the lowest
    child index. A node with fewer than max_children children stops the
    walk (it will be expanded); pass max_children=None to only stop at
    childless or terminal nodes.
    """
    path = [root]
    node = root
    while True:
        if node.terminal or not node.children:
            return path
        if max_children is not None and len(node.children) < max_children:
            return path
        best_idx = 0
        best_value = -math.inf
        for idx, child in enumerate(node.children):
            value = uct_value(
                child.mean_reward if child.visit_count else 0.0,
                max(node.visit_count, 1),
                child.visit_count,
                alpha,
            )
            if value > best_value:
                best_value, best_idx = value, idx
        node = node.children[best_idx]
        path.append(node)


def _prefix_frames(path: list[SearchNode]) -> tuple[Keyframe, ...]:
    frames: list[Keyframe] = []
    for node in path:
        frames.extend(node.segment)
    return tuple(frames)


def expand(
    path: list[SearchNode],
    prompt: str,
    proposer,
    config: SearchConfig,
    initial: Keyframe,
    stats: SearchStats | None = None,
    template: str | None = None,
) -> SearchNode:
    """Ask the proposer to complete the path's prefix; store one child.

    The first segment of the completion becomes the child; the full
    completed plan is retained on the child for simulation. A completion
    whose first segment matches an existing sibling within the duplicate
    tolerance is merged into that sibling (its retained plan is kept).
    """
    leaf = path[-1]
    if leaf.terminal:
        raise ValueError("cannot expand a terminal node")
    prefix = _prefix_frames(path)
    request = ProposalRequest(
        prompt=prompt,
        prefix=KeyframePlan(prefix, prompt, config.segment_length) if prefix else None,
        target_length=config.target_length,
        segment_length=config.segment_length,
        initial=initial,
        template=template,
    )
    response = propose(proposer, request)
    completion = response.completion
    seg_len = min(config.segment_length, config.target_length - len(prefix))
    segment = completion[:seg_len]
    full_plan = KeyframePlan(prefix + completion, prompt, config.segment_length)

    seg_pos = np.stack([f.key_positions for f in segment])
    for sibling in leaf.children:
        sib_pos = np.stack([f.key_positions for f in sibling.segment])
        if sib_pos.shape == seg_pos.shape and np.abs(sib_pos - seg_pos).max() <= config.duplicate_tolerance:
            if stats is not None:
                stats.duplicates_merged += 1
            return sibling

    child = SearchNode(
        segment=tuple(segment),
        depth=leaf.depth + 1,
        terminal=leaf.depth + 1 == config.max_depth,
        completion=full_plan,
    )
    leaf.children.append(child)
    if stats is not None:
        stats.nodes_expanded += 1
    return child


def backpropagate(path: list[SearchNode], reward: float) -> None:
    """Add one visit along the path; add the reward unless this was a
    re-simulation of an existing terminal node (visits-only update, which
    strictly decays that node's mean and steers the search elsewhere)."""
    terminal_revisit = path[-1].terminal and path[-1].visit_count > 0
    for node in path:
        node.visit_count += 1
        if not terminal_revisit:
            node.total_reward += reward


def make_plan_evaluator(
    skeleton: Skeleton,
    prior,
    backend,
    camera: CameraSpec | None = None,
    ik_config: IkConfig | None = None,
    ground_height: float = 0.0,
    stats: SearchStats | None = None,
) -> Callable[[KeyframePlan], float]:
    """Build the default rollout scorer: IK per keyframe, render, score.

    Keyframes are solved in order with warm starts. A frame whose solve
    errors out or fails to converge scores the floor value (0 raw) and is
    counted in the stats; the rollout stays total.
    """
    from .ik import IkProblem, solve
    from .protocol import score_frames

    camera = camera or CameraSpec()
    # rollout solves gate on render fidelity, not millimeter precision
    ik_config = ik_config or IkConfig(
        regularizer_weight=1e-4, tolerance=0.05, max_iterations=200
    )

    def evaluate(plan: KeyframePlan) -> float:
        warm = None
        scores = []
        for frame in plan.frames:
            problem = IkProblem(
                skeleton,
                frame,
                regularizer_weight=ik_config.regularizer_weight,
                max_iterations=ik_config.max_iterations,
                step_size=ik_config.step_size,
                tolerance=ik_config.tolerance,
            )
            try:
                sol = solve(problem, prior, z_init=warm)
            except Exception:
                if stats is not None:
                    stats.ik_failures += 1
                scores.append(0.0)
                continue
            warm = sol.solution_vector
            if not sol.converged:
                if stats is not None:
                    stats.ik_failures += 1
                scores.append(0.0)
                continue
            png = render_frame_png(skeleton, sol.pose, camera, ground_height)
            scores.append(score_frames(backend, plan.prompt, [png]))
        return float(np.mean(scores))

    return evaluate


def _plan_key(plan: KeyframePlan) -> str:
    digest = hashlib.sha256()
    digest.update(plan.prompt.encode())
    digest.update(plan.positions().tobytes())
    return digest.hexdigest()


def search(
    prompt: str,
    config: SearchConfig,
    proposer,
    evaluate_plan: Callable[[KeyframePlan], float],
    initial: Keyframe,
    template: str | None = None,
) -> SearchResult:
    """Run select/expand/simulate/backpropagate rounds and keep the best rollout."""
    root = SearchNode(segment=(), depth=0, terminal=False)
    stats = SearchStats()
    cache: dict[str, float] = {}
    best_plan: KeyframePlan | None = None
    best_score = -math.inf

    def simulate(plan: KeyframePlan) -> float:
        key = _plan_key(plan)
        if key in cache:
            stats.cache_hits += 1
            return cache[key]
        raw = evaluate_plan(plan)
        stats.simulations_run += 1
        cache[key] = raw
        return raw

    for _ in range(config.iterations):
        path = select_leaf(root, config.exploration, config.max_children_per_node)
        node = path[-1]
        if node.terminal:
            plan = node.completion
        else:
            try:
                child = expand(path, prompt, proposer, config, initial, stats, template)
            except Exception as exc:
                if best_plan is None:
                    raise SearchError(f"every expansion failed: {exc}", stats) from exc
                raise
            path = path + [child]
            plan = child.completion
        raw = simulate(plan)
        backpropagate(path, normalize_score(raw))
        if raw > best_score:
            best_score, best_plan = raw, plan

    if best_plan is None:
        raise SearchError("no complete plan produced", stats)
    return SearchResult(best_plan, best_score, stats, root)


def plan_keyframes(
    prompt: str,
    config: SearchConfig,
    proposer,
    skeleton: Skeleton,
    prior,
    score_backend,
    camera: CameraSpec | None = None,
    ik_config: IkConfig | None = None,
    ground_height: float = 0.0,
) -> SearchResult:
    """End-to-end planning with the default IK/render/score evaluator."""
    stats_holder = SearchStats()
    evaluator = make_plan_evaluator(
        skeleton, prior, score_backend, camera, ik_config, ground_height, stats_holder
    )
    from .protocol import default_prompt_template

    initial = extract_key_positions(skeleton, standing_pose(skeleton))
    result = search(prompt, config, proposer, evaluator, initial, default_prompt_template())
    result.stats.ik_failures = stats_holder.ik_failures
    return result


def dump_tree(result: SearchResult) -> dict:
    """JSON-ready export of the search tree with per-node statistics."""

    def node_doc(node: SearchNode) -> dict:
        return {
            "depth": node.depth,
            "terminal": node.terminal,
            "visits": node.visit_count,
            "total_reward": node.total_reward,
            "mean_reward": node.mean_reward if node.visit_count else None,
            "segment": [
                {"positions": [[float(v) for v in row] for row in f.key_positions]}
                for f in node.segment
            ],
            "children": [node_doc(c) for c in node.children],
        }

    return {
        "reward_normalization": "(score/100 + 1)/2 maps raw [-100, 100] scores to [0, 1]",
        "best_score_raw": result.best_score,
        "stats": {
            "nodes_expanded": result.stats.nodes_expanded,
            "simulations_run": result.stats.simulations_run,
            "cache_hits": result.stats.cache_hits,
            "ik_failures": result.stats.ik_failures,
            "duplicates_merged": result.stats.duplicates_merged,
        },
        "tree": node_doc(result.root),
    }
