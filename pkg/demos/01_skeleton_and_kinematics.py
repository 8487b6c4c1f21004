"""Walk through the skeleton model and forward kinematics.

The humanoid has 22 joints in a tree rooted at the pelvis; a pose is the
root placement plus one Euler triple per joint. Forward kinematics
composes rotations down the tree, so the pelvis always lands exactly at
the root translation.
"""

import numpy as np

from textmotion import Pose, default_skeleton, forward_kinematics, standing_pose
from textmotion.kinematics import position_jacobian
from textmotion.skeleton import chain_skeleton

skel = default_skeleton()
print(f"{skel.num_joints} joints, pose dimension {skel.pose_dim}")
print("key joints:", [skel.joint_names[i] for i in skel.key_joint_indices])

pose = standing_pose(skel)
positions = forward_kinematics(skel, pose)
print(f"\nstanding pose: pelvis at {positions[0].round(3)}")
for name in ("head", "left_wrist", "left_ankle", "left_foot"):
    idx = skel.joint_names.index(name)
    print(f"  {name:12s} {positions[idx].round(3)}")

# bend the left elbow 90 degrees and watch the wrist move
bent = pose.body_rotations.copy()
bent[skel.joint_names.index("left_elbow") - 1, 2] = np.pi / 2
wrist = skel.joint_names.index("left_wrist")
moved = forward_kinematics(skel, Pose(pose.root_translation, pose.root_rotation, bent))
print(f"\nleft wrist before elbow bend: {positions[wrist].round(3)}")
print(f"left wrist after  elbow bend: {moved[wrist].round(3)}")

# the analytic position Jacobian matches finite differences
jac = position_jacobian(skel, pose, skel.key_joint_indices)
vec = pose.as_vector()
col = 3 + 2  # root yaw
h = 1e-6
hi, lo = vec.copy(), vec.copy()
hi[col] += h
lo[col] -= h
fd = (
    forward_kinematics(skel, Pose.from_vector(hi))[skel.key_joint_indices]
    - forward_kinematics(skel, Pose.from_vector(lo))[skel.key_joint_indices]
).ravel() / (2 * h)
print(f"\nJacobian column vs finite differences, max error: {np.abs(jac[:, col] - fd).max():.2e}")

# the bundled 3-joint chain makes hand-checkable cases easy
chain = chain_skeleton()
body = np.zeros((2, 3))
body[0, 2] = np.pi / 2
tip = forward_kinematics(chain, Pose(np.zeros(3), np.zeros(3), body))[2]
print(f"\n3-joint chain, middle joint at 90 degrees: tip at {tip.round(6)} (expected [1, 1, 0])")
