"""Skeleton definition: joint hierarchy, rest offsets, key-joint selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Canonical order of the planned joints in every keyframe.
KEY_JOINT_NAMES = ("pelvis", "left_wrist", "right_wrist", "left_ankle", "right_ankle")


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Joint tree with per-joint rest offsets (meters, parent frame, Y-up).

    parents[i] is the parent joint index, -1 for the root (index 0). Joints
    are stored in topological order (parents[i] < i). key_joint_indices lists
    the planned joints in the canonical order of KEY_JOINT_NAMES.
    """

    joint_names: tuple[str, ...]
    parents: np.ndarray
    rest_offsets: np.ndarray
    key_joint_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        object.__setattr__(self, "parents", np.asarray(self.parents, dtype=int))
        object.__setattr__(self, "rest_offsets", np.asarray(self.rest_offsets, dtype=float))
        object.__setattr__(
            self, "key_joint_indices", np.asarray(self.key_joint_indices, dtype=int)
        )
        j = len(self.joint_names)
        if self.parents.shape != (j,):
            raise ValueError(f"parents must have shape ({j},)")
        if self.rest_offsets.shape != (j, 3):
            raise ValueError(f"rest_offsets must have shape ({j}, 3)")
        if self.parents[0] != -1:
            raise ValueError("joint 0 must be the root (parent -1)")
        for i in range(1, j):
            if not 0 <= self.parents[i] < i:
                raise ValueError(f"parents must be topologically ordered; joint {i} breaks this")
        k = self.key_joint_indices
        if k.size:
            if len(set(k.tolist())) != k.size or k.min() < 0 or k.max() >= j:
                raise ValueError("key_joint_indices must be distinct valid joint indices")

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def pose_dim(self) -> int:
        # root translation + root rotation + one Euler triple per non-root joint
        return 6 + 3 * (self.num_joints - 1)

    def children_of(self, index: int) -> list[int]:
        return [i for i in range(self.num_joints) if self.parents[i] == index]

    def chain_to_root(self, index: int) -> list[int]:
        """Joint indices from `index` up to and including the root."""
        out = [index]
        while self.parents[out[-1]] != -1:
            out.append(int(self.parents[out[-1]]))
        return out


# 22-joint humanoid, first 22 joints of the SMPL neutral layout, offsets in
# meters. Designed so the zero pose stands upright facing +Z with arms out.
_HUMANOID_JOINTS = [
    # name, parent, offset (x, y, z)
    ("pelvis", -1, (0.0, 0.0, 0.0)),
    ("left_hip", 0, (0.09, -0.08, 0.0)),
    ("right_hip", 0, (-0.09, -0.08, 0.0)),
    ("spine1", 0, (0.0, 0.11, 0.0)),
    ("left_knee", 1, (0.0, -0.38, 0.0)),
    ("right_knee", 2, (0.0, -0.38, 0.0)),
    ("spine2", 3, (0.0, 0.14, 0.0)),
    ("left_ankle", 4, (0.0, -0.4, 0.0)),
    ("right_ankle", 5, (0.0, -0.4, 0.0)),
    ("spine3", 6, (0.0, 0.06, 0.0)),
    ("left_foot", 7, (0.0, -0.04, 0.12)),
    ("right_foot", 8, (0.0, -0.04, 0.12)),
    ("neck", 9, (0.0, 0.22, 0.0)),
    ("left_collar", 9, (0.08, 0.12, 0.0)),
    ("right_collar", 9, (-0.08, 0.12, 0.0)),
    ("head", 12, (0.0, 0.14, 0.0)),
    ("left_shoulder", 13, (0.1, 0.02, 0.0)),
    ("right_shoulder", 14, (-0.1, 0.02, 0.0)),
    ("left_elbow", 16, (0.26, 0.0, 0.0)),
    ("right_elbow", 17, (-0.26, 0.0, 0.0)),
    ("left_wrist", 18, (0.25, 0.0, 0.0)),
    ("right_wrist", 19, (-0.25, 0.0, 0.0)),
]


def default_skeleton() -> Skeleton:
    """The 22-joint humanoid used by the full pipeline."""
    names = tuple(j[0] for j in _HUMANOID_JOINTS)
    parents = np.array([j[1] for j in _HUMANOID_JOINTS], dtype=int)
    offsets = np.array([j[2] for j in _HUMANOID_JOINTS], dtype=float)
    key = np.array([names.index(n) for n in KEY_JOINT_NAMES], dtype=int)
    return Skeleton(names, parents, offsets, key)


def chain_skeleton() -> Skeleton:
    """3-joint planar chain with unit +X offsets, for analytic tests.

    The single key joint is the end of the chain.
    """
    return Skeleton(
        joint_names=("base", "mid", "tip"),
        parents=np.array([-1, 0, 1]),
        rest_offsets=np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        key_joint_indices=np.array([2]),
    )
