"""Densify key poses into a full motion by direct trajectory optimization.

The dense motion minimizes the aligned reconstruction error plus a
soft-DTW alignment cost (weight lam) and a second-difference smoothness
prior (weight mu) standing in for a learned motion prior. All L x dim
motion scalars are free variables; the alignment map is frozen inside
each gradient step and refreshed every few steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dtw import AlignmentMap, alignment_map, combined_loss, cost_matrix
from .optim import minimize_scaled_descent
from .pose import Motion, Pose
from .rotations import slerp_euler


@dataclass
class CompletionConfig:
    target_length: int
    lam: float = 0.01
    gamma: float = 0.1
    smoothness_weight: float = 0.1
    max_steps: int = 2000
    step_size: float = 1e-2
    seed: int = 0
    fps: float = 20.0
    tau_refresh: int = 10

    def __post_init__(self):
        if self.lam < 0 or self.gamma <= 0 or self.smoothness_weight < 0:
            raise ValueError("weights must be non-negative and gamma positive")
        if self.tau_refresh < 1:
            raise ValueError("tau_refresh must be at least 1")


@dataclass
class CompletionResult:
    motion: Motion
    final_loss: float
    loss_history: list[float] = field(repr=False, default_factory=list)
    alignment: AlignmentMap = None


def key_frame_indices(n_keys: int, length: int) -> np.ndarray:
    """Evenly spaced target indices for the key poses (first and last pinned)."""
    if n_keys < 2:
        return np.zeros(max(n_keys, 0), dtype=int)
    return np.array([(i * (length - 1)) // (n_keys - 1) for i in range(n_keys)], dtype=int)


def _interp_pose(a: Pose, b: Pose, t: float) -> Pose:
    trans = (1.0 - t) * a.root_translation + t * b.root_translation
    root = slerp_euler(a.root_rotation, b.root_rotation, t)
    body = np.stack(
        [
            slerp_euler(a.body_rotations[j], b.body_rotations[j], t)
            for j in range(a.body_rotations.shape[0])
        ]
    )
    return Pose(trans, root, body)


def initialize(keys: list[Pose], length: int, fps: float = 20.0) -> Motion:
    """Key poses at evenly spaced indices, interpolated in between.

    Root translation interpolates linearly; every rotation goes through
    quaternion slerp. A single key pose is repeated for all frames.
    """
    keys = list(keys)
    if length < len(keys):
        raise ValueError("target length shorter than the key sequence")
    if len(keys) < 2:
        return Motion(tuple(keys[0] for _ in range(length)), fps)
    indices = key_frame_indices(len(keys), length)
    frames: list[Pose] = [None] * length
    for k, idx in enumerate(indices):
        frames[idx] = keys[k]
    for k in range(len(keys) - 1):
        lo, hi = indices[k], indices[k + 1]
        for j in range(lo + 1, hi):
            t = (j - lo) / (hi - lo)
            frames[j] = _interp_pose(keys[k], keys[k + 1], t)
    return Motion(tuple(frames), fps)


def smoothness_term(arr: np.ndarray) -> tuple[float, np.ndarray]:
    """Sum of squared second differences along time, with gradient."""
    if arr.shape[0] < 3:
        return 0.0, np.zeros_like(arr)
    d = arr[2:] - 2.0 * arr[1:-1] + arr[:-2]
    value = float(np.sum(d * d))
    grad = np.zeros_like(arr)
    grad[2:] += 2.0 * d
    grad[1:-1] += -4.0 * d
    grad[:-2] += 2.0 * d
    return value, grad


def complete(keys: list[Pose], config: CompletionConfig) -> CompletionResult:
    """Optimize the dense trajectory under the alignment + smoothness losses.

    The recorded loss history is the best-so-far curve, non-increasing by
    construction (alignment refreshes can raise the instantaneous loss).
    """
    key_mat = np.stack([p.as_vector() for p in keys])
    length = config.target_length
    init = initialize(keys, length, config.fps)
    shape = (length, key_mat.shape[1])

    tau_holder = {"tau": alignment_map(cost_matrix(key_mat, init.as_array()))}

    def objective(flat: np.ndarray) -> tuple[float, np.ndarray]:
        arr = flat.reshape(shape)
        loss, grad = combined_loss(
            key_mat, arr, config.gamma, config.lam, tau_holder["tau"]
        )
        s_val, s_grad = smoothness_term(arr)
        return loss + config.smoothness_weight * s_val, (
            grad + config.smoothness_weight * s_grad
        ).ravel()

    def refresh(step: int, flat: np.ndarray) -> None:
        if step % config.tau_refresh == 0:
            tau_holder["tau"] = alignment_map(
                cost_matrix(key_mat, flat.reshape(shape))
            )

    result = minimize_scaled_descent(
        objective,
        init.as_array().ravel(),
        max_steps=config.max_steps,
        step_size=config.step_size,
        grad_tol=1e-9,
        on_step=refresh,
    )
    best_arr = result.x.reshape(shape)
    final_tau = alignment_map(cost_matrix(key_mat, best_arr))
    history = list(np.minimum.accumulate(result.loss_history))
    return CompletionResult(
        motion=Motion.from_array(best_arr, config.fps),
        final_loss=result.loss,
        loss_history=history,
        alignment=final_tau,
    )
