"""Plan keyframes for a prompt with Monte Carlo tree search over segments.

The stub proposer answers with playbook templates plus seeded jitter, and
the stub scorer measures pixel distance to a target rendering, so the
whole search runs offline and reproducibly.
"""

import json
from pathlib import Path

from textmotion import SearchConfig, default_pose_prior, default_skeleton
from textmotion.search import dump_tree, plan_keyframes
from textmotion.stubs import StubBackend

out = Path("demo_output")
out.mkdir(parents=True, exist_ok=True)

skel = default_skeleton()
prior = default_pose_prior()
backend = StubBackend(seed=11)

config = SearchConfig(
    iterations=12, exploration=0.05, segment_length=2, target_length=6
)
result = plan_keyframes("squat down slowly", config, backend, skel, prior, backend)

print(f"best raw score: {result.best_score:.2f}")
print(f"expanded {result.stats.nodes_expanded} nodes, "
      f"{result.stats.simulations_run} simulations, "
      f"{result.stats.cache_hits} cache hits")
print("\npelvis trajectory of the winning plan:")
for i, frame in enumerate(result.best_plan.frames):
    print(f"  keyframe {i}: {frame.key_positions[0].round(3)}")

tree_doc = dump_tree(result)
(out / "search_tree.json").write_text(json.dumps(tree_doc, indent=2))
print(f"\nfull tree dumped to {out / 'search_tree.json'}")

def show(node, depth=0):
    q = f"{node['mean_reward']:.3f}" if node["mean_reward"] is not None else "  -  "
    print("  " * depth + f"depth {node['depth']}: N={node['visits']:2d} Q={q}")
    for child in node["children"]:
        show(child, depth + 1)

print("\ntree statistics (visits and mean reward):")
show(tree_doc["tree"])
