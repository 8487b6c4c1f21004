"""Forward kinematics and its analytic position Jacobian."""

from __future__ import annotations

import numpy as np

from .pose import Keyframe, Pose
from .rotations import euler_to_matrix, euler_to_matrix_with_derivs
from .skeleton import Skeleton


def _local_rotation(pose: Pose, joint: int) -> np.ndarray:
    if joint == 0:
        return euler_to_matrix(pose.root_rotation)
    return euler_to_matrix(pose.body_rotations[joint - 1])


def fk_with_frames(skeleton: Skeleton, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    """World positions (J, 3) and global rotations (J, 3, 3) for every joint.

    Positions compose parent global rotations with rest offsets down the
    tree; the pelvis lands exactly at the root translation.
    """
    if pose.body_rotations.shape[0] != skeleton.num_joints - 1:
        raise ValueError(
            f"pose has {pose.body_rotations.shape[0] + 1} joints, "
            f"skeleton has {skeleton.num_joints}"
        )
    j = skeleton.num_joints
    positions = np.zeros((j, 3))
    rotations = np.zeros((j, 3, 3))
    positions[0] = pose.root_translation
    rotations[0] = _local_rotation(pose, 0)
    for i in range(1, j):
        p = skeleton.parents[i]
        positions[i] = positions[p] + rotations[p] @ skeleton.rest_offsets[i]
        rotations[i] = rotations[p] @ _local_rotation(pose, i)
    return positions, rotations


def forward_kinematics(skeleton: Skeleton, pose: Pose) -> np.ndarray:
    """World positions (J, 3) of every joint, meters."""
    return fk_with_frames(skeleton, pose)[0]


def extract_key_positions(skeleton: Skeleton, pose: Pose) -> Keyframe:
    """Absolute keyframe holding the pose's key-joint world positions."""
    positions = forward_kinematics(skeleton, pose)
    return Keyframe(positions[skeleton.key_joint_indices], "absolute")


def position_jacobian(
    skeleton: Skeleton, pose: Pose, target_joints: np.ndarray
) -> np.ndarray:
    """d(world positions of target_joints) / d(pose vector).

    Shape (len(target_joints) * 3, pose_dim) with pose-vector ordering
    [root translation, root rotation, body rotations]. Rotating joint i
    moves a target k only when i is a strict ancestor of k.
    """
    target_joints = np.asarray(target_joints, dtype=int)
    positions, rotations = fk_with_frames(skeleton, pose)
    n_t = len(target_joints)
    jac = np.zeros((n_t * 3, skeleton.pose_dim))

    ancestors = [set(skeleton.chain_to_root(int(k))[1:]) for k in target_joints]

    for row, k in enumerate(target_joints):
        jac[row * 3 : row * 3 + 3, 0:3] = np.eye(3)

    for i in range(skeleton.num_joints):
        angles = pose.root_rotation if i == 0 else pose.body_rotations[i - 1]
        _, dr = euler_to_matrix_with_derivs(angles)
        parent = skeleton.parents[i]
        g_parent = np.eye(3) if parent == -1 else rotations[parent]
        col = 3 if i == 0 else 6 + 3 * (i - 1)
        for row, k in enumerate(target_joints):
            if i not in ancestors[row]:
                continue
            # p_k = p_i + G_i v, with v independent of joint i's own rotation
            v = rotations[i].T @ (positions[k] - positions[i])
            for axis in range(3):
                jac[row * 3 : row * 3 + 3, col + axis] = g_parent @ dr[axis] @ v
    return jac


def lowest_rest_point(skeleton: Skeleton, radii: np.ndarray | None = None) -> float:
    """Lowest proxy point of the zero pose with zero root translation."""
    pose = Pose.zero(skeleton)
    heights = forward_kinematics(skeleton, pose)[:, 1]
    if radii is not None:
        heights = heights - np.asarray(radii, dtype=float)
    return float(heights.min())


def standing_pose(skeleton: Skeleton, radii: np.ndarray | None = None) -> Pose:
    """Zero pose lifted so its lowest proxy point touches the ground plane."""
    lift = -lowest_rest_point(skeleton, radii)
    return Pose(np.array([0.0, lift, 0.0]), np.zeros(3), np.zeros((skeleton.num_joints - 1, 3)))
