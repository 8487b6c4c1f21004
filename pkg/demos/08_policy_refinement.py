"""Post-train a one-step Gaussian denoising policy on a bandit reward.

The policy starts centered at the origin; the reward peaks at a target
point. The clipped importance-ratio updates move the policy mean toward
the target a sliver at a time (the clip threshold is 1e-3).
"""

import numpy as np

from textmotion.refine import (
    DenoisingMdp,
    GaussianDenoisingPolicy,
    PpoConfig,
    estimate_mean_reward,
    post_train,
)

target = np.array([1.3, -1.0])


def reward_fn(m):
    d = m - target
    return float(np.exp(-np.sum(d * d)))


mdp = DenoisingMdp(num_steps=1, dim=2)
policy = GaussianDenoisingPolicy.initial(mdp)
config = PpoConfig()
print(f"clip={config.clip_epsilon}, lr={config.learning_rate}, "
      f"buffer={config.buffer_size}, batch={config.batch_size}")

before = estimate_mean_reward(mdp, policy, reward_fn, 500, seed=99)
trained, curve = post_train(mdp, policy, reward_fn, config, iterations=120, seed=0)
after = estimate_mean_reward(mdp, trained, reward_fn, 500, seed=100)

print(f"\nmean reward before: {before:.4f}")
print(f"mean reward after : {after:.4f}  ({after / before:.2f}x)")
print(f"policy bias moved to {trained.biases[0].round(3)} (target {target})")

print("\nreward curve (every 15 iterations):")
for i in range(0, len(curve), 15):
    bar = "#" * int(curve[i] * 200)
    print(f"  iter {i:3d}: {curve[i]:.4f} {bar}")
