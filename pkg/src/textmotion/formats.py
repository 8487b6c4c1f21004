"""On-disk formats: skeleton, motion, keyframe-plan JSON and matrix files.

Every writer emits floats with Python's shortest round-trip repr, so a
write -> read -> write cycle is byte-identical. The motion format has a
text form and a binary form distinguished by a magic prefix.

Skeleton file (text)::

    textmotion-skeleton v1
    joints <J>
    key_joints <i0> <i1> ...
    joint <name> <parent> <x> <y> <z>     # one line per joint, tree order

Motion file (text)::

    textmotion-motion v1
    fps <fps>
    frames <L> <pose_dim>
    <pose_dim floats per line>

Motion file (binary): magic ``TMMOTION1``, then little-endian f64 fps,
u32 L, u32 pose_dim, then L * pose_dim little-endian f64 values.

Matrix file (text)::

    textmotion-matrices v1
    matrix <name> <rows> <cols>
    <cols floats per line> * rows         # repeated per matrix

Keyframe plan JSON::

    {"prompt": str, "mode": "delta"|"absolute", "segment_length": int,
     "frames": [{"pelvis": [x,y,z], "l_wrist": [...], "r_wrist": [...],
                 "l_ankle": [...], "r_ankle": [...]}, ...]}
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .pose import Keyframe, KeyframePlan, Motion
from .skeleton import Skeleton

MOTION_BINARY_MAGIC = b"TMMOTION1"

# JSON field names for the five planned joints, in canonical keyframe order.
PLAN_JOINT_FIELDS = ("pelvis", "l_wrist", "r_wrist", "l_ankle", "r_ankle")


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_row(row) -> str:
    return " ".join(_fmt(v) for v in row)


# -- skeleton ---------------------------------------------------------------

def save_skeleton(path: str | Path, skeleton: Skeleton) -> None:
    lines = ["textmotion-skeleton v1", f"joints {skeleton.num_joints}"]
    lines.append("key_joints " + " ".join(str(int(i)) for i in skeleton.key_joint_indices))
    for name, parent, offset in zip(
        skeleton.joint_names, skeleton.parents, skeleton.rest_offsets
    ):
        lines.append(f"joint {name} {int(parent)} {_fmt_row(offset)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_skeleton(path: str | Path) -> Skeleton:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "textmotion-skeleton v1":
        raise ValueError(f"{path}: not a skeleton file")
    n = int(lines[1].split()[1])
    key = np.array([int(v) for v in lines[2].split()[1:]], dtype=int)
    names, parents, offsets = [], [], []
    for line in lines[3 : 3 + n]:
        parts = line.split()
        names.append(parts[1])
        parents.append(int(parts[2]))
        offsets.append([float(v) for v in parts[3:6]])
    return Skeleton(tuple(names), np.array(parents), np.array(offsets), key)


# -- motion -----------------------------------------------------------------

def save_motion(path: str | Path, motion: Motion, binary: bool = False) -> None:
    arr = motion.as_array()
    if binary:
        header = MOTION_BINARY_MAGIC + struct.pack(
            "<dII", float(motion.fps), arr.shape[0], arr.shape[1]
        )
        Path(path).write_bytes(header + arr.astype("<f8").tobytes())
        return
    lines = [
        "textmotion-motion v1",
        f"fps {_fmt(motion.fps)}",
        f"frames {arr.shape[0]} {arr.shape[1]}",
    ]
    lines.extend(_fmt_row(row) for row in arr)
    Path(path).write_text("\n".join(lines) + "\n")


def load_motion(path: str | Path) -> Motion:
    raw = Path(path).read_bytes()
    if raw.startswith(MOTION_BINARY_MAGIC):
        off = len(MOTION_BINARY_MAGIC)
        fps, n_frames, dim = struct.unpack_from("<dII", raw, off)
        data = np.frombuffer(raw, dtype="<f8", offset=off + 16, count=n_frames * dim)
        return Motion.from_array(data.reshape(n_frames, dim).copy(), fps)
    lines = raw.decode().splitlines()
    if not lines or lines[0] != "textmotion-motion v1":
        raise ValueError(f"{path}: not a motion file")
    fps = float(lines[1].split()[1])
    n_frames, dim = (int(v) for v in lines[2].split()[1:])
    arr = np.array(
        [[float(v) for v in line.split()] for line in lines[3 : 3 + n_frames]]
    ).reshape(n_frames, dim)
    return Motion.from_array(arr, fps)


# -- keyframe plans ---------------------------------------------------------

def plan_to_json_dict(plan: KeyframePlan) -> dict:
    modes = {f.mode for f in plan.frames}
    if len(modes) != 1:
        raise ValueError("plan JSON requires a single mode for all frames")
    frames = []
    for f in plan.frames:
        frames.append(
            {name: [float(v) for v in f.key_positions[i]] for i, name in enumerate(PLAN_JOINT_FIELDS)}
        )
    return {
        "prompt": plan.prompt,
        "mode": modes.pop(),
        "segment_length": plan.segment_length,
        "frames": frames,
    }


def plan_from_json_dict(doc: dict) -> KeyframePlan:
    mode = doc["mode"]
    if mode not in ("delta", "absolute"):
        raise ValueError(f"unknown plan mode {mode!r}")
    frames = []
    for entry in doc["frames"]:
        pos = np.array([entry[name] for name in PLAN_JOINT_FIELDS], dtype=float)
        frames.append(Keyframe(pos, mode))
    return KeyframePlan(tuple(frames), doc.get("prompt", ""), int(doc.get("segment_length", 2)))


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_plan(path: str | Path, plan: KeyframePlan) -> None:
    Path(path).write_text(dump_json(plan_to_json_dict(plan)))


def load_plan(path: str | Path) -> KeyframePlan:
    return plan_from_json_dict(json.loads(Path(path).read_text()))


# -- named matrices ---------------------------------------------------------

def save_matrices(path: str | Path, matrices: dict[str, np.ndarray]) -> None:
    lines = ["textmotion-matrices v1"]
    for name, mat in matrices.items():
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        lines.append(f"matrix {name} {mat.shape[0]} {mat.shape[1]}")
        lines.extend(_fmt_row(row) for row in mat)
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrices(path: str | Path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "textmotion-matrices v1":
        raise ValueError(f"{path}: not a matrix file")
    out: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if parts[0] != "matrix":
            raise ValueError(f"{path}: expected matrix header at line {i + 1}")
        name, rows, cols = parts[1], int(parts[2]), int(parts[3])
        block = lines[i + 1 : i + 1 + rows]
        out[name] = np.array([[float(v) for v in line.split()] for line in block]).reshape(
            rows, cols
        )
        i += 1 + rows
    return out
