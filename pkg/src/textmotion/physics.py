"""Physical-plausibility rewards and metrics for motions.

Three exponential rewards (foot sliding, floating, ground penetration)
plus millimeter-scale floating/penetration metrics. The body's lowest
surface point is approximated by joint centers minus per-joint downward
radii (no mesh ships here); radii are configurable and default to 2 cm on
ankle and foot joints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import forward_kinematics
from .pose import Motion, Pose
from .skeleton import Skeleton

FOOT_PROXY_JOINTS = ("left_ankle", "right_ankle", "left_foot", "right_foot")
DEFAULT_FOOT_RADIUS = 0.02


@dataclass(frozen=True, eq=False)
class SurfaceProxy:
    """Per-joint downward radii (meters) plus the ground plane height."""

    radii: np.ndarray
    ground_height: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float).ravel()
        if (r < 0).any():
            raise ValueError("proxy radii must be non-negative")
        object.__setattr__(self, "radii", r)


def default_proxy(skeleton: Skeleton, ground_height: float = 0.0) -> SurfaceProxy:
    radii = np.zeros(skeleton.num_joints)
    for name in FOOT_PROXY_JOINTS:
        if name in skeleton.joint_names:
            radii[skeleton.joint_names.index(name)] = DEFAULT_FOOT_RADIUS
    return SurfaceProxy(radii, ground_height)


@dataclass(frozen=True, eq=False)
class ContactLabels:
    """Per-frame binary contact labels, one row per foot (left, right)."""

    labels: np.ndarray  # (2, L) in {0, 1}

    def __post_init__(self):
        arr = np.asarray(self.labels, dtype=float)
        if not np.isin(arr, (0.0, 1.0)).all():
            raise ValueError("contact labels must be binary")
        object.__setattr__(self, "labels", arr)


def _joint_positions(skeleton: Skeleton, motion: Motion) -> np.ndarray:
    return np.stack([forward_kinematics(skeleton, p) for p in motion.frames])


def lowest_point(skeleton: Skeleton, pose: Pose, proxy: SurfaceProxy) -> float:
    """Lowest proxy height: min over joints of (joint Y - radius)."""
    heights = forward_kinematics(skeleton, pose)[:, 1] - proxy.radii
    return float(heights.min())


def _lowest_points(skeleton: Skeleton, motion: Motion, proxy: SurfaceProxy) -> np.ndarray:
    positions = _joint_positions(skeleton, motion)
    return (positions[:, :, 1] - proxy.radii[None, :]).min(axis=1)


def _ankle_indices(skeleton: Skeleton) -> list[int]:
    return [skeleton.joint_names.index(n) for n in ("left_ankle", "right_ankle")]


def derive_contacts(
    skeleton: Skeleton,
    motion: Motion,
    proxy: SurfaceProxy,
    height_thresh: float = 0.05,
    speed_thresh: float = 0.01,
) -> ContactLabels:
    """Threshold rule: a foot is planted when its ankle proxy is near the
    ground and barely moving. The first frame copies the second frame's
    speed decision (no predecessor to difference against)."""
    if len(motion) < 2:
        raise ValueError("contact derivation needs at least two frames")
    ankles = _ankle_indices(skeleton)
    positions = _joint_positions(skeleton, motion)[:, ankles]  # (L, 2, 3)
    radii = np.array([proxy.radii[i] for i in ankles])

    near = (positions[:, :, 1] - radii[None, :]) <= proxy.ground_height + height_thresh
    speeds = np.linalg.norm(np.diff(positions, axis=0), axis=2)  # (L-1, 2)
    slow = speeds <= speed_thresh
    slow_full = np.vstack([slow[0:1], slow])  # frame 0 copies frame 1's decision
    return ContactLabels((near & slow_full).astype(float).T)


def reward_foot_sliding(
    skeleton: Skeleton, motion: Motion, contacts: ContactLabels
) -> float:
    """Mean over frames of exp(-|in-contact foot displacement|).

    A foot's displacement between consecutive frames counts only when it
    is in contact at both; the two feet's masked displacements concatenate
    into one 6-vector per frame pair.
    """
    if len(motion) < 2:
        raise ValueError("foot sliding needs at least two frames")
    ankles = _ankle_indices(skeleton)
    positions = _joint_positions(skeleton, motion)[:, ankles]  # (L, 2, 3)
    labels = contacts.labels.T  # (L, 2)
    terms = []
    for i in range(1, len(motion)):
        gate = (labels[i] * labels[i - 1])[:, None]  # (2, 1)
        masked = (positions[i] - positions[i - 1]) * gate
        terms.append(np.exp(-np.linalg.norm(masked.ravel())))
    return float(np.mean(terms))


def reward_floating(skeleton: Skeleton, motion: Motion, proxy: SurfaceProxy) -> float:
    """Mean over frames of exp(-(height above ground)), active only above."""
    lows = _lowest_points(skeleton, motion, proxy)
    gap = np.abs(lows - proxy.ground_height) * (lows > proxy.ground_height)
    return float(np.mean(np.exp(-gap)))


def reward_penetration(skeleton: Skeleton, motion: Motion, proxy: SurfaceProxy) -> float:
    """Mean over frames of exp(-(depth below ground)), active only below."""
    lows = _lowest_points(skeleton, motion, proxy)
    depth = np.abs(proxy.ground_height - lows) * (lows < proxy.ground_height)
    return float(np.mean(np.exp(-depth)))


@dataclass(frozen=True)
class RewardWeights:
    sliding: float = 1.0 / 3.0
    floating: float = 1.0 / 3.0
    penetration: float = 1.0 / 3.0

    def __post_init__(self):
        if min(self.sliding, self.floating, self.penetration) < 0:
            raise ValueError("reward weights must be non-negative")
        if self.sliding + self.floating + self.penetration <= 0:
            raise ValueError("reward weights must not all vanish")


def combined_reward(
    skeleton: Skeleton,
    motion: Motion,
    contacts: ContactLabels | None = None,
    proxy: SurfaceProxy | None = None,
    weights: RewardWeights = RewardWeights(),
) -> float:
    """Weighted mean of the three rewards (uniform weights by default)."""
    proxy = proxy or default_proxy(skeleton)
    contacts = contacts or derive_contacts(skeleton, motion, proxy)
    total = weights.sliding + weights.floating + weights.penetration
    value = (
        weights.sliding * reward_foot_sliding(skeleton, motion, contacts)
        + weights.floating * reward_floating(skeleton, motion, proxy)
        + weights.penetration * reward_penetration(skeleton, motion, proxy)
    )
    return float(value / total)


def metric_float(skeleton: Skeleton, motion: Motion, proxy: SurfaceProxy) -> float:
    """Mean height of the lowest proxy point above ground, millimeters."""
    lows = _lowest_points(skeleton, motion, proxy)
    gap = np.abs(lows - proxy.ground_height) * (lows > proxy.ground_height)
    return float(np.mean(gap) * 1000.0)


def metric_pene(skeleton: Skeleton, motion: Motion, proxy: SurfaceProxy) -> float:
    """Mean depth of the lowest proxy point below ground, millimeters."""
    lows = _lowest_points(skeleton, motion, proxy)
    depth = np.abs(proxy.ground_height - lows) * (lows < proxy.ground_height)
    return float(np.mean(depth) * 1000.0)
