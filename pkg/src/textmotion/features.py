"""Conversion of motions to the 263-dim per-frame feature layout.

Layout (per frame, L-1 frames for a motion of length L):

    [0]        root angular velocity about +Y (rad/frame)
    [1:3]      root linear velocity in the heading frame, (x, z) (m/frame)
    [3]        root height (m)
    [4:67]     21 non-root joint positions, root-relative, heading-normalized
    [67:193]   21 joint rotations as the first two matrix columns, row-major
    [193:259]  22 joint world-velocity vectors, heading-normalized (m/frame)
    [259:263]  binary contacts for (l_ankle, l_foot, r_ankle, r_foot)
"""

from __future__ import annotations

import numpy as np

from .kinematics import fk_with_frames
from .pose import Motion
from .rotations import euler_to_matrix, yaw_matrix, yaw_of_matrix
from .skeleton import Skeleton

FEATURE_DIM = 263

CONTACT_JOINTS = ("left_ankle", "left_foot", "right_ankle", "right_foot")
CONTACT_RADIUS = 0.02
CONTACT_HEIGHT_THRESH = 0.05
CONTACT_SPEED_THRESH = 0.01


def _wrap_angle(a: float) -> float:
    return float((a + np.pi) % (2.0 * np.pi) - np.pi)


def _contact_flags(
    heights: np.ndarray, speeds: np.ndarray, ground_height: float
) -> np.ndarray:
    """Per-frame binary contacts from proxy height and per-frame speed.

    heights is (L, J_c), speeds is (L-1, J_c) with speeds[t] the displacement
    magnitude from frame t to t+1.
    """
    near = heights - CONTACT_RADIUS <= ground_height + CONTACT_HEIGHT_THRESH
    slow = speeds <= CONTACT_SPEED_THRESH
    flags = near[:-1] & slow
    return flags.astype(float)


def to_feature_263(
    skeleton: Skeleton, motion: Motion, ground_height: float = 0.0
) -> np.ndarray:
    """(L-1, 263) feature array for a motion on the default 22-joint skeleton."""
    if skeleton.num_joints != 22:
        raise ValueError("the 263-dim layout is defined for the 22-joint skeleton")
    if len(motion) < 2:
        raise ValueError("need at least two frames to form velocities")

    length = len(motion)
    positions = np.zeros((length, 22, 3))
    yaws = np.zeros(length)
    for t, pose in enumerate(motion.frames):
        pos, rot = fk_with_frames(skeleton, pose)
        positions[t] = pos
        yaws[t] = yaw_of_matrix(rot[0])

    contact_idx = [skeleton.joint_names.index(n) for n in CONTACT_JOINTS]
    contact_heights = positions[:, contact_idx, 1]
    contact_speeds = np.linalg.norm(np.diff(positions[:, contact_idx], axis=0), axis=2)
    contacts = _contact_flags(contact_heights, contact_speeds, ground_height)

    out = np.zeros((length - 1, FEATURE_DIM))
    for t in range(length - 1):
        pose = motion.frames[t]
        inv_heading = yaw_matrix(-yaws[t])

        out[t, 0] = _wrap_angle(yaws[t + 1] - yaws[t])
        v_root = inv_heading @ (positions[t + 1, 0] - positions[t, 0])
        out[t, 1:3] = v_root[[0, 2]]
        out[t, 3] = positions[t, 0, 1]

        rel = (positions[t, 1:] - positions[t, 0]) @ inv_heading.T
        out[t, 4:67] = rel.ravel()

        six_d = np.zeros((21, 6))
        for j in range(21):
            r = euler_to_matrix(pose.body_rotations[j])
            six_d[j] = r[:, :2].ravel()
        out[t, 67:193] = six_d.ravel()

        vel = (positions[t + 1] - positions[t]) @ inv_heading.T
        out[t, 193:259] = vel.ravel()
        out[t, 259:263] = contacts[t]
    return out
