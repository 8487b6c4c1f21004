"""Densify three key poses into a 40-frame motion.

The optimizer moves every frame of the dense trajectory to minimize the
aligned key-pose error plus a soft-DTW term (temporal flexibility) and a
second-difference smoothness prior.
"""

import numpy as np

from textmotion import CompletionConfig, Pose, complete, default_skeleton, standing_pose
from textmotion.completion import smoothness_term
from textmotion.formats import save_motion
from pathlib import Path

skel = default_skeleton()
base = standing_pose(skel)

# three key poses: stand, squat with arms forward, stand shifted forward
squat_body = np.zeros((21, 3))
for name, angle in (("left_knee", 1.2), ("right_knee", 1.2)):
    squat_body[skel.joint_names.index(name) - 1, 0] = angle
keys = [
    base,
    Pose(base.root_translation + np.array([0.0, -0.25, 0.1]), base.root_rotation, squat_body),
    Pose(base.root_translation + np.array([0.0, 0.0, 0.3]), base.root_rotation, base.body_rotations),
]

config = CompletionConfig(target_length=40, max_steps=800)
result = complete(keys, config)
print(f"completed {len(result.motion)} frames, final loss {result.final_loss:.5f}")
print(f"keys aligned to frames {list(result.alignment.tau)}")

arr = result.motion.as_array()
for i, key in enumerate(keys):
    err = np.linalg.norm(key.as_vector() - arr[result.alignment[i]])
    print(f"  key {i}: pose error at aligned frame = {err:.4f}")

print(f"smoothness (sum of squared second differences): {smoothness_term(arr)[0]:.5f}")
print(f"best-loss curve: {result.loss_history[0]:.4f} -> {result.loss_history[-1]:.4f} "
      f"over {len(result.loss_history)} steps")

out = Path("demo_output")
out.mkdir(exist_ok=True)
save_motion(out / "completed_demo.motion", result.motion)
print(f"wrote {out / 'completed_demo.motion'}")
