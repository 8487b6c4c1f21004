"""Soft dynamic time warping: smoothed cost, gradients, alignment maps.

The smoothed minimum makes the alignment cost differentiable; as gamma
drops it converges to classic DTW from below, and its gradient becomes
the indicator of the optimal path.
"""

import numpy as np

from textmotion import alignment_map, cost_matrix, hard_dtw, soft_dtw, soft_dtw_grad

rng = np.random.default_rng(0)
keys = rng.normal(size=(3, 4))
motion = np.concatenate([keys[0:1]] * 2 + [keys[1:2]] * 3 + [keys[2:3]] * 3)
motion = motion + rng.normal(scale=0.05, size=motion.shape)

d = cost_matrix(keys, motion)
print("cost matrix (keys x frames):")
print(d.values.round(2))

hard_value, path = hard_dtw(d)
print(f"\nhard DTW value: {hard_value:.4f}, path: {path}")

print("\nsoft DTW converges from below as gamma drops:")
for gamma in (1.0, 0.1, 0.01, 0.001):
    print(f"  gamma={gamma:<6}: {soft_dtw(d, gamma).value:.4f}")

grad = soft_dtw_grad(d, 0.01)
print("\nsoft-DTW gradient (alignment occupancy) at gamma=0.01:")
print(grad.round(2))

tau = alignment_map(d)
print(f"\nalignment map: key i -> frame {tau.tau.tolist()}")
print("(each key lands on its noisy copy in the longer sequence)")
