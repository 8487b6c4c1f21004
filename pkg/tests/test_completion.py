import numpy as np
import pytest

from textmotion.completion import (
    CompletionConfig,
    complete,
    initialize,
    key_frame_indices,
    smoothness_term,
)
from textmotion.dtw import recon_loss
from textmotion.kinematics import standing_pose
from textmotion.pose import Motion, Pose
from textmotion.rotations import slerp_euler
from textmotion.skeleton import default_skeleton


def synthetic_smooth_motion(skel, length=40, fps=20.0, cycles=3.0):
    """Sinusoidal root sway plus a slerp joint sweep; smooth by construction."""
    base = standing_pose(skel)
    target_body = np.zeros((21, 3))
    target_body[15, 2] = np.pi / 2  # sweep the left shoulder
    target_body[3, 0] = 0.4
    frames = []
    for i in range(length):
        t = i / (length - 1)
        trans = base.root_translation + np.array(
            [
                0.15 * np.sin(2 * np.pi * cycles * t),
                0.05 * np.sin(2 * np.pi * t),
                0.3 * t,
            ]
        )
        body = np.stack(
            [slerp_euler(np.zeros(3), target_body[j], t) for j in range(21)]
        )
        frames.append(Pose(trans, base.root_rotation, body))
    return Motion(tuple(frames), fps)


def test_key_frame_indices_endpoints():
    idx = key_frame_indices(3, 40)
    assert idx[0] == 0 and idx[-1] == 39
    assert np.array_equal(idx, [0, 19, 39])


def test_initialize_midpoint_root():
    skel = default_skeleton()
    a = standing_pose(skel)
    b = Pose(a.root_translation + np.array([1.0, 0.0, 0.0]), a.root_rotation, a.body_rotations)
    motion = initialize([a, b], 3)
    assert len(motion) == 3
    assert np.allclose(
        motion.frames[1].root_translation, a.root_translation + [0.5, 0.0, 0.0]
    )


def test_initialize_identical_keys_constant():
    skel = default_skeleton()
    p = standing_pose(skel)
    motion = initialize([p, p, p], 7)
    arr = motion.as_array()
    assert np.allclose(arr, arr[0])


def test_initialize_single_key_repeats():
    skel = default_skeleton()
    p = standing_pose(skel)
    motion = initialize([p], 5)
    assert len(motion) == 5
    assert np.allclose(motion.as_array(), p.as_vector())


def test_initialize_slerp_midpoint_angle():
    skel = default_skeleton()
    a = standing_pose(skel)
    body = a.body_rotations.copy()
    body[4, 1] = np.pi / 2  # rotate one joint 90 degrees about one axis
    b = Pose(a.root_translation, a.root_rotation, body)
    motion = initialize([a, b], 3)
    # quaternion slerp at t=0.5 of a single-axis rotation halves the angle
    assert np.isclose(motion.frames[1].body_rotations[4, 1], np.pi / 4, atol=1e-10)


def test_smoothness_zero_on_linear_motion():
    t = np.linspace(0.0, 1.0, 9)[:, None]
    arr = t @ np.array([[1.0, -2.0, 0.5]])
    value, grad = smoothness_term(arr)
    assert value == pytest.approx(0.0, abs=1e-24)
    assert np.allclose(grad, 0.0)


def test_smoothness_gradient_matches_fd():
    rng = np.random.default_rng(0)
    arr = rng.normal(size=(6, 4))
    _, grad = smoothness_term(arr)
    h = 1e-6
    flat = arr.ravel()
    for idx in range(flat.size):
        hi, lo = flat.copy(), flat.copy()
        hi[idx] += h
        lo[idx] -= h
        fd = (smoothness_term(hi.reshape(arr.shape))[0] - smoothness_term(lo.reshape(arr.shape))[0]) / (2 * h)
        assert abs(grad.ravel()[idx] - fd) <= 1e-4


def test_complete_already_optimal_at_zero_weights():
    skel = default_skeleton()
    source = synthetic_smooth_motion(skel, length=12)
    keys = [source.frames[i] for i in (0, 6, 11)]
    config = CompletionConfig(target_length=12, lam=0.0, smoothness_weight=0.0, max_steps=50)
    result = complete(keys, config)
    assert result.final_loss == pytest.approx(0.0, abs=1e-12)


def test_complete_pins_keys_with_zero_weights():
    skel = default_skeleton()
    rng = np.random.default_rng(1)
    base = standing_pose(skel)
    keys = [
        Pose(
            base.root_translation + rng.normal(scale=0.1, size=3),
            rng.normal(scale=0.2, size=3),
            rng.normal(scale=0.2, size=(21, 3)),
        )
        for _ in range(3)
    ]
    config = CompletionConfig(target_length=10, lam=0.0, smoothness_weight=0.0, max_steps=300)
    result = complete(keys, config)
    key_mat = np.stack([p.as_vector() for p in keys])
    assert recon_loss(key_mat, result.motion.as_array(), result.alignment) <= 1e-8


def test_complete_recovers_keys_from_smooth_source():
    skel = default_skeleton()
    source = synthetic_smooth_motion(skel, length=40)
    key_ids = (0, 20, 39)
    keys = [source.frames[i] for i in key_ids]
    config = CompletionConfig(target_length=40)
    result = complete(keys, config)
    assert len(result.motion) == 40
    arr = result.motion.as_array()
    for k, pose in enumerate(keys):
        residual = np.linalg.norm(pose.as_vector() - arr[result.alignment[k]])
        assert residual <= 0.05

    source_smooth, _ = smoothness_term(source.as_array())
    completed_smooth, _ = smoothness_term(arr)
    assert completed_smooth <= 2.0 * source_smooth


def test_complete_deterministic():
    skel = default_skeleton()
    source = synthetic_smooth_motion(skel, length=20)
    keys = [source.frames[i] for i in (0, 10, 19)]
    config = CompletionConfig(target_length=20, max_steps=200)
    a = complete(keys, config)
    b = complete(keys, config)
    assert np.array_equal(a.motion.as_array(), b.motion.as_array())
    assert a.final_loss == b.final_loss
    assert np.array_equal(a.alignment.tau, b.alignment.tau)


def test_complete_best_loss_history_non_increasing():
    skel = default_skeleton()
    source = synthetic_smooth_motion(skel, length=16)
    keys = [source.frames[i] for i in (0, 8, 15)]
    result = complete(keys, CompletionConfig(target_length=16, max_steps=150))
    hist = result.loss_history
    assert all(b <= a + 1e-15 for a, b in zip(hist, hist[1:]))


def test_complete_output_length_matches_config():
    skel = default_skeleton()
    source = synthetic_smooth_motion(skel, length=10)
    keys = [source.frames[i] for i in (0, 9)]
    for L in (5, 12, 30):
        result = complete(keys, CompletionConfig(target_length=L, max_steps=60))
        assert len(result.motion) == L


def test_complete_smoothness_monotone_in_weight():
    skel = default_skeleton()
    rng = np.random.default_rng(2)
    base = standing_pose(skel)
    keys = [
        Pose(
            base.root_translation + rng.normal(scale=0.2, size=3),
            base.root_rotation,
            rng.normal(scale=0.3, size=(21, 3)),
        )
        for _ in range(3)
    ]
    values = []
    for mu in (0.01, 0.1, 1.0):
        config = CompletionConfig(target_length=14, smoothness_weight=mu, max_steps=400)
        result = complete(keys, config)
        values.append(smoothness_term(result.motion.as_array())[0])
    assert values[1] <= values[0] + 1e-9
    assert values[2] <= values[1] + 1e-9
