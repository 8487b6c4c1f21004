"""Render stick figures and extract the 263-dim motion features."""

from pathlib import Path

import numpy as np

from textmotion import Motion, Pose, default_skeleton, standing_pose, to_feature_263
from textmotion.render import CameraSpec, render_frame_png

out = Path("demo_output/render")
out.mkdir(parents=True, exist_ok=True)

skel = default_skeleton()
camera = CameraSpec()
base = standing_pose(skel)

# three poses: standing, arms-down-ish, jump apex
poses = {"standing": base}
bent = base.body_rotations.copy()
bent[skel.joint_names.index("left_shoulder") - 1, 2] = -np.pi / 3
bent[skel.joint_names.index("right_shoulder") - 1, 2] = np.pi / 3
poses["arms_lowered"] = Pose(base.root_translation, base.root_rotation, bent)
poses["jump_apex"] = Pose(
    base.root_translation + np.array([0.0, 0.4, 0.0]), base.root_rotation, base.body_rotations
)

for name, pose in poses.items():
    png = render_frame_png(skel, pose, camera)
    (out / f"{name}.png").write_bytes(png)
    print(f"wrote {out / f'{name}.png'} ({len(png)} bytes)")

# renders are bit-stable: the same pose yields identical bytes
again = render_frame_png(skel, poses["standing"], camera)
print("deterministic bytes:", again == render_frame_png(skel, poses["standing"], camera))

# feature extraction on a short forward walk
frames = tuple(
    Pose(
        base.root_translation + np.array([0.0, 0.0, 0.05 * t]),
        base.root_rotation,
        base.body_rotations,
    )
    for t in range(8)
)
feats = to_feature_263(skel, Motion(frames, fps=20.0))
print(f"\nfeature array shape: {feats.shape} (frames-1 x 263)")
print("root forward velocity per frame:", feats[:, 2].round(4))
print("foot contact flags, first frame:", feats[0, 259:263])
