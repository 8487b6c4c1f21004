import numpy as np

from textmotion.formats import (
    load_matrices,
    load_motion,
    load_plan,
    load_skeleton,
    save_matrices,
    save_motion,
    save_plan,
    save_skeleton,
)
from textmotion.pose import Keyframe, KeyframePlan, Motion, Pose
from textmotion.skeleton import Skeleton, default_skeleton


def random_motion(rng, n_frames=4, n_joints=22, fps=20.0):
    frames = tuple(
        Pose(rng.normal(size=3), rng.normal(size=3), rng.normal(size=(n_joints - 1, 3)))
        for _ in range(n_frames)
    )
    return Motion(frames, fps)


def random_skeleton(rng, n_joints=6):
    parents = np.array([-1] + [int(rng.integers(0, i)) for i in range(1, n_joints)])
    return Skeleton(
        tuple(f"j{i}" for i in range(n_joints)),
        parents,
        rng.normal(size=(n_joints, 3)),
        np.array([n_joints - 1]),
    )


def test_skeleton_roundtrip_byte_identical(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(20):
        skel = random_skeleton(rng) if i else default_skeleton()
        p1, p2 = tmp_path / f"a{i}.skel", tmp_path / f"b{i}.skel"
        save_skeleton(p1, skel)
        save_skeleton(p2, load_skeleton(p1))
        assert p1.read_bytes() == p2.read_bytes()


def test_motion_roundtrip_byte_identical_text_and_binary(tmp_path):
    rng = np.random.default_rng(1)
    for i in range(20):
        motion = random_motion(rng, n_frames=int(rng.integers(1, 6)))
        for binary in (False, True):
            p1 = tmp_path / f"a{i}_{binary}.motion"
            p2 = tmp_path / f"b{i}_{binary}.motion"
            save_motion(p1, motion, binary=binary)
            save_motion(p2, load_motion(p1), binary=binary)
            assert p1.read_bytes() == p2.read_bytes()


def test_motion_binary_and_text_agree(tmp_path):
    rng = np.random.default_rng(2)
    motion = random_motion(rng)
    save_motion(tmp_path / "m.txt", motion)
    save_motion(tmp_path / "m.bin", motion, binary=True)
    a = load_motion(tmp_path / "m.txt")
    b = load_motion(tmp_path / "m.bin")
    assert a.fps == b.fps
    assert np.array_equal(a.as_array(), b.as_array())


def test_plan_roundtrip_byte_identical(tmp_path):
    rng = np.random.default_rng(3)
    for i in range(20):
        mode = "delta" if i % 2 else "absolute"
        frames = tuple(
            Keyframe(rng.normal(size=(5, 3)), mode) for _ in range(int(rng.integers(1, 5)))
        )
        plan = KeyframePlan(frames, prompt=f"prompt {i}", segment_length=2)
        p1, p2 = tmp_path / f"a{i}.json", tmp_path / f"b{i}.json"
        save_plan(p1, plan)
        save_plan(p2, load_plan(p1))
        assert p1.read_bytes() == p2.read_bytes()


def test_plan_json_schema_fields(tmp_path):
    plan = KeyframePlan((Keyframe(np.zeros((5, 3))),), prompt="wave", segment_length=2)
    save_plan(tmp_path / "p.json", plan)
    import json

    doc = json.loads((tmp_path / "p.json").read_text())
    assert set(doc) == {"prompt", "mode", "segment_length", "frames"}
    assert set(doc["frames"][0]) == {"pelvis", "l_wrist", "r_wrist", "l_ankle", "r_ankle"}


def test_matrices_roundtrip_byte_identical(tmp_path):
    rng = np.random.default_rng(4)
    for i in range(20):
        mats = {
            "P": rng.normal(size=(int(rng.integers(1, 5)), int(rng.integers(1, 7)))),
            "mean": rng.normal(size=(1, 6)),
        }
        p1, p2 = tmp_path / f"a{i}.mat", tmp_path / f"b{i}.mat"
        save_matrices(p1, mats)
        save_matrices(p2, load_matrices(p1))
        assert p1.read_bytes() == p2.read_bytes()
        loaded = load_matrices(p1)
        assert np.array_equal(loaded["P"], mats["P"])
