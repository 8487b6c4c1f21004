import math

import numpy as np
import pytest

from textmotion.pose import Keyframe, KeyframePlan
from textmotion.search import (
    SearchConfig,
    SearchNode,
    backpropagate,
    dump_tree,
    expand,
    normalize_score,
    search,
    select_leaf,
    uct_value,
)
from textmotion.stubs import StubProposer

from .helpers import TwoChoiceProposer, additive_plan_scorer, decode_plan_choices, rest_keyframe


def make_node(depth=0, terminal=False, n=0, w=0.0, segment=()):
    return SearchNode(
        segment=tuple(segment), depth=depth, terminal=terminal, visit_count=n, total_reward=w
    )


def test_uct_worked_example_values():
    # parent N=10; children (Q=0.5, N=2) and (Q=0.55, N=8); alpha=0.05
    u1 = uct_value(0.5, 10, 2, 0.05)
    u2 = uct_value(0.55, 10, 8, 0.05)
    assert abs(u1 - (0.5 + 0.05 * math.sqrt(2 * math.log(10) / 2))) <= 1e-15
    assert abs(u2 - (0.55 + 0.05 * math.sqrt(2 * math.log(10) / 8))) <= 1e-15
    assert abs(u1 - 0.5758715) <= 1e-6
    assert abs(u2 - 0.5879359) <= 1e-6
    assert u2 > u1


def test_select_prefers_higher_uct_child():
    root = make_node(n=10)
    first = make_node(depth=1, n=2, w=1.0, terminal=True)
    second = make_node(depth=1, n=8, w=0.55 * 8, terminal=True)
    root.children = [first, second]
    path = select_leaf(root, alpha=0.05, max_children=2)
    assert path == [root, second]


def test_select_unvisited_child_first():
    root = make_node(n=10)
    visited = make_node(depth=1, n=5, w=5.0, terminal=True)
    fresh = make_node(depth=1, n=0, terminal=True)
    root.children = [visited, fresh]
    path = select_leaf(root, alpha=0.05, max_children=2)
    assert path[-1] is fresh


def test_select_alpha_zero_is_greedy():
    root = make_node(n=100)
    low = make_node(depth=1, n=1, w=0.2, terminal=True)
    high = make_node(depth=1, n=90, w=0.7 * 90, terminal=True)
    root.children = [low, high]
    assert select_leaf(root, alpha=0.0, max_children=2)[-1] is high


def test_select_stops_at_expandable_node():
    root = make_node(n=3)
    only = make_node(depth=1, n=3, w=2.0)
    root.children = [only]
    # room for more children: stop at root for expansion
    assert select_leaf(root, alpha=0.05, max_children=2) == [root]
    # fully expanded: descend
    assert select_leaf(root, alpha=0.05, max_children=1) == [root, only]


def test_expand_stores_first_segment_and_full_completion():
    config = SearchConfig(iterations=1, target_length=4, segment_length=2, max_children_per_node=3)
    root = make_node()
    proposer = StubProposer(seed=0)
    initial = rest_keyframe()
    child = expand([root], "stand still", proposer, config, initial)
    assert len(child.segment) == 2
    assert len(child.completion) == 4
    assert child.depth == 1 and not child.terminal
    assert child.visit_count == 0 and child.total_reward == 0.0
    # the child's segment is the first two frames of its retained plan
    for a, b in zip(child.segment, child.completion.frames[:2]):
        assert np.array_equal(a.key_positions, b.key_positions)


def test_expand_final_depth_child_is_terminal_with_short_segment():
    # K=5, K_s=2 -> d_max=3; last segment holds 5 - 2*2 = 1 frame
    config = SearchConfig(iterations=1, target_length=5, segment_length=2)
    assert config.max_depth == 3
    root = make_node()
    proposer = StubProposer(seed=0)
    initial = rest_keyframe()
    path = [root]
    for _ in range(2):
        child = expand(path, "stand", proposer, config, initial)
        path = path + [child]
    last = expand(path, "stand", proposer, config, initial)
    assert last.terminal
    assert len(last.segment) == 1


def test_expand_merges_duplicate_siblings():
    config = SearchConfig(iterations=1, target_length=2, segment_length=2)
    root = make_node()
    proposer = StubProposer(seed=0, jitter=0.0)  # no jitter: identical proposals
    initial = rest_keyframe()
    first = expand([root], "stand", proposer, config, initial)
    second = expand([root], "stand", proposer, config, initial)
    assert second is first
    assert len(root.children) == 1


def test_backpropagate_fresh_node():
    root = make_node(n=1, w=0.3)
    child = make_node(depth=1)
    root.children = [child]
    backpropagate([root, child], 0.8)
    assert child.visit_count == 1 and child.total_reward == 0.8
    assert child.mean_reward == 0.8
    assert root.visit_count == 2 and root.total_reward == pytest.approx(1.1)


def test_backpropagate_running_average():
    node = make_node(n=3, w=1.5)
    backpropagate([node], 0.5)
    assert node.visit_count == 4
    assert node.total_reward == 2.0
    assert node.mean_reward == 0.5


def test_backpropagate_terminal_revisit_decays_mean():
    root = make_node(n=2, w=1.0)
    terminal = make_node(depth=1, terminal=True, n=1, w=0.9)
    root.children = [terminal]
    q_before = terminal.mean_reward
    backpropagate([root, terminal], 0.9)
    assert terminal.visit_count == 2
    assert terminal.total_reward == 0.9  # unchanged
    assert terminal.mean_reward < q_before
    assert root.total_reward == 1.0  # ancestors also skip the reward


def test_backpropagate_fresh_terminal_gets_reward_once():
    root = make_node(n=1, w=0.5)
    terminal = make_node(depth=1, terminal=True, n=0, w=0.0)
    root.children = [terminal]
    backpropagate([root, terminal], 0.7)
    assert terminal.visit_count == 1 and terminal.total_reward == 0.7


def test_normalize_score_range():
    assert normalize_score(-100.0) == 0.0
    assert normalize_score(0.0) == 0.5
    assert normalize_score(100.0) == 1.0


def test_search_finds_bruteforce_optimum_on_exhaustible_tree():
    config = SearchConfig(
        iterations=30, exploration=0.05, target_length=3, segment_length=1, max_children_per_node=2
    )
    hits = 0
    for seed in range(10):
        evaluate, best_choice, best_value = additive_plan_scorer(seed)
        result = search("enumerate", config, TwoChoiceProposer(), evaluate, rest_keyframe())
        if decode_plan_choices(result.best_plan) == best_choice:
            hits += 1
            assert result.best_score == pytest.approx(best_value)
    assert hits == 10


def test_search_single_iteration_returns_first_rollout():
    config = SearchConfig(iterations=1, target_length=3, segment_length=1, max_children_per_node=2)
    evaluate, _, _ = additive_plan_scorer(0)
    result = search("one", config, TwoChoiceProposer(), evaluate, rest_keyframe())
    assert result.stats.simulations_run == 1
    assert decode_plan_choices(result.best_plan) == (0, 0, 0)


def test_search_deterministic_under_seed():
    def cheap_eval(plan):
        return float(np.mean(plan.positions()[:, 0, 1])) * 10.0

    config = SearchConfig(iterations=8, target_length=4, segment_length=2)
    runs = []
    for _ in range(2):
        result = search(
            "raise the arm", config, StubProposer(seed=11), cheap_eval, rest_keyframe()
        )
        runs.append(result)
    assert runs[0].best_score == runs[1].best_score
    assert np.array_equal(runs[0].best_plan.positions(), runs[1].best_plan.positions())


def test_search_tree_visit_invariant():
    def cheap_eval(plan):
        return float(np.mean(plan.positions())) * 5.0

    config = SearchConfig(iterations=20, target_length=4, segment_length=2)
    result = search("step forward", config, StubProposer(seed=3), cheap_eval, rest_keyframe())

    def check(node):
        if node.children:
            assert node.visit_count >= sum(c.visit_count for c in node.children)
        for c in node.children:
            check(c)

    check(result.root)


def test_search_monotone_exploration_on_two_child_tree():
    config = SearchConfig(
        iterations=500, exploration=0.05, target_length=1, segment_length=1, max_children_per_node=2
    )
    evaluate, _, _ = additive_plan_scorer(2, depth=1)
    result = search("pick", config, TwoChoiceProposer(depth=1), evaluate, rest_keyframe())
    assert len(result.root.children) == 2
    for child in result.root.children:
        assert child.visit_count >= 50


def test_search_best_score_reproducible_by_resimulation():
    config = SearchConfig(iterations=25, target_length=3, segment_length=1, max_children_per_node=2)
    evaluate, _, _ = additive_plan_scorer(5)
    result = search("best", config, TwoChoiceProposer(), evaluate, rest_keyframe())
    assert evaluate(result.best_plan) == result.best_score


def test_dump_tree_schema():
    config = SearchConfig(iterations=6, target_length=3, segment_length=1, max_children_per_node=2)
    evaluate, _, _ = additive_plan_scorer(1)
    result = search("dump", config, TwoChoiceProposer(), evaluate, rest_keyframe())
    doc = dump_tree(result)
    assert "reward_normalization" in doc
    assert doc["stats"]["simulations_run"] >= 1
    assert doc["tree"]["visits"] == result.root.visit_count
    import json

    json.dumps(doc)  # must be JSON-serializable

def test_plan_evaluator_constant_scorer_returns_constant():
    from textmotion.kinematics import extract_key_positions, standing_pose
    from textmotion.prior import default_pose_prior
    from textmotion.search import make_plan_evaluator
    from textmotion.skeleton import default_skeleton
    from textmotion.stubs import ConstantScorer

    skel = default_skeleton()
    evaluator = make_plan_evaluator(skel, default_pose_prior(), ConstantScorer(60.0))
    standing = extract_key_positions(skel, standing_pose(skel))
    plan = KeyframePlan((standing, standing, standing), "hold still", 2)
    assert evaluator(plan) == 60.0
    # a single-frame plan scores exactly that frame's value
    single = KeyframePlan((standing,), "hold", 1)
    assert evaluator(single) == 60.0
