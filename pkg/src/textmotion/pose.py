"""Pose, motion and keyframe value types plus their vector/delta conversions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .skeleton import KEY_JOINT_NAMES, Skeleton


@dataclass(frozen=True, eq=False)
class Pose:
    """One body configuration: root placement plus per-joint Euler rotations.

    root_translation: (3,) meters, Y-up world frame.
    root_rotation: (3,) intrinsic XYZ Euler angles, radians.
    body_rotations: (J-1, 3) Euler angles for every non-root joint.

    For the default 22-joint skeleton the flattened vector has
    3 + 3 + 63 = 69 scalars.
    """

    root_translation: np.ndarray
    root_rotation: np.ndarray
    body_rotations: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.root_translation, dtype=float).reshape(3)
        r = np.asarray(self.root_rotation, dtype=float).reshape(3)
        b = np.asarray(self.body_rotations, dtype=float).reshape(-1, 3)
        for arr, name in ((t, "root_translation"), (r, "root_rotation"), (b, "body_rotations")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "root_translation", t)
        object.__setattr__(self, "root_rotation", r)
        object.__setattr__(self, "body_rotations", b)

    @property
    def dim(self) -> int:
        return 6 + 3 * self.body_rotations.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.root_translation, self.root_rotation, self.body_rotations.ravel()]
        )

    @staticmethod
    def from_vector(vec: np.ndarray) -> "Pose":
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size < 6 or (vec.size - 6) % 3 != 0:
            raise ValueError(f"pose vector length {vec.size} is not 6 + 3k")
        return Pose(vec[:3], vec[3:6], vec[6:].reshape(-1, 3))

    @staticmethod
    def zero(skeleton: Skeleton) -> "Pose":
        return Pose(
            np.zeros(3), np.zeros(3), np.zeros((skeleton.num_joints - 1, 3))
        )


@dataclass(frozen=True, eq=False)
class Motion:
    """Timed pose sequence. All frames must share one skeleton layout."""

    frames: tuple[Pose, ...]
    fps: float

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 1:
            raise ValueError("a motion needs at least one frame")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        dims = {f.dim for f in self.frames}
        if len(dims) != 1:
            raise ValueError("all frames must have the same pose dimension")

    def __len__(self) -> int:
        return len(self.frames)

    def as_array(self) -> np.ndarray:
        return np.stack([f.as_vector() for f in self.frames])

    @staticmethod
    def from_array(arr: np.ndarray, fps: float) -> "Motion":
        arr = np.asarray(arr, dtype=float)
        return Motion(tuple(Pose.from_vector(row) for row in arr), fps)


@dataclass(frozen=True, eq=False)
class Keyframe:
    """Positions of the five planned joints, meters.

    Rows follow KEY_JOINT_NAMES order (pelvis, wrists, ankles). mode is
    "absolute" or "delta"; a delta frame holds displacements from the
    previous keyframe.
    """

    key_positions: np.ndarray
    mode: str = "absolute"

    def __post_init__(self):
        p = np.asarray(self.key_positions, dtype=float).reshape(len(KEY_JOINT_NAMES), 3)
        object.__setattr__(self, "key_positions", p)
        if self.mode not in ("absolute", "delta"):
            raise ValueError(f"unknown keyframe mode {self.mode!r}")
        if self.mode == "absolute" and not np.all(np.isfinite(p)):
            raise ValueError("absolute key positions must be finite")


@dataclass(frozen=True, eq=False)
class KeyframePlan:
    """Ordered keyframes for one prompt, grouped in segments of segment_length."""

    frames: tuple[Keyframe, ...]
    prompt: str = ""
    segment_length: int = 2

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 1:
            raise ValueError("a plan needs at least one keyframe")
        if self.segment_length < 1:
            raise ValueError("segment_length must be positive")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def is_absolute(self) -> bool:
        return all(f.mode == "absolute" for f in self.frames)

    def positions(self) -> np.ndarray:
        """(K, 5, 3) stack of per-frame key positions (any mode)."""
        return np.stack([f.key_positions for f in self.frames])


def plan_to_absolute(plan: KeyframePlan, initial: Keyframe | None = None) -> KeyframePlan:
    """Resolve delta keyframes into absolute ones by running cumulative sums.

    `initial` anchors a leading delta frame; it is not part of the output.
    Plans that are already absolute are returned unchanged.
    """
    if plan.is_absolute:
        return plan
    if initial is not None and initial.mode != "absolute":
        raise ValueError("initial keyframe must be absolute")
    out = []
    prev = None if initial is None else initial.key_positions
    for i, frame in enumerate(plan.frames):
        if frame.mode == "absolute":
            pos = frame.key_positions
        else:
            if prev is None:
                raise ValueError(f"delta keyframe {i} has no predecessor and no initial anchor")
            pos = prev + frame.key_positions
        if not np.all(np.isfinite(pos)):
            raise ValueError(f"keyframe {i} resolves to non-finite positions")
        out.append(Keyframe(pos, "absolute"))
        prev = pos
    return KeyframePlan(tuple(out), plan.prompt, plan.segment_length)


def plan_to_delta(plan: KeyframePlan, initial: Keyframe) -> KeyframePlan:
    """Inverse of plan_to_absolute: express an absolute plan as deltas."""
    if not plan.is_absolute:
        raise ValueError("plan_to_delta expects an absolute plan")
    if initial.mode != "absolute":
        raise ValueError("initial keyframe must be absolute")
    out = []
    prev = initial.key_positions
    for frame in plan.frames:
        out.append(Keyframe(frame.key_positions - prev, "delta"))
        prev = frame.key_positions
    return KeyframePlan(tuple(out), plan.prompt, plan.segment_length)
