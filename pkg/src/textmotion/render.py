"""Deterministic stick-figure rendering of poses to small RGB bitmaps."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from .kinematics import forward_kinematics
from .pose import Pose
from .skeleton import Skeleton

BONE_COLOR = (20, 20, 140)
JOINT_COLOR = (180, 30, 30)
GROUND_COLOR = (170, 170, 170)


@dataclass(frozen=True)
class CameraSpec:
    """Fixed orthographic camera on the +Z axis.

    World X maps to image columns, world Y to image rows (up on screen);
    depth is dropped. Sized for typical image-encoder inputs.
    """

    width: int = 224
    height: int = 224
    pixels_per_meter: float = 90.0
    origin_col: float = 112.0   # image column of world x = 0
    ground_row: float = 200.0   # image row of world y = 0

    def project(self, points: np.ndarray) -> np.ndarray:
        """(N, 3) world points -> (N, 2) float pixel (col, row)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        cols = self.origin_col + self.pixels_per_meter * points[:, 0]
        rows = self.ground_row - self.pixels_per_meter * points[:, 1]
        return np.stack([cols, rows], axis=1)


def render_frame(
    skeleton: Skeleton,
    pose: Pose,
    camera: CameraSpec = CameraSpec(),
    ground_height: float = 0.0,
) -> np.ndarray:
    """Rasterize one pose as a stick figure on white; returns (H, W, 3) uint8.

    Pixels are a pure function of the inputs: repeated calls are
    byte-identical.
    """
    img = Image.new("RGB", (camera.width, camera.height), (255, 255, 255))
    draw = ImageDraw.Draw(img)

    ground = camera.project(np.array([[0.0, ground_height, 0.0]]))[0, 1]
    draw.line([(0, ground), (camera.width - 1, ground)], fill=GROUND_COLOR, width=1)

    positions = forward_kinematics(skeleton, pose)
    px = camera.project(positions)
    for child in range(1, skeleton.num_joints):
        parent = skeleton.parents[child]
        draw.line(
            [tuple(px[parent]), tuple(px[child])],
            fill=BONE_COLOR,
            width=3,
        )
    for col, row in px:
        draw.ellipse([col - 2, row - 2, col + 2, row + 2], fill=JOINT_COLOR)
    return np.asarray(img)


def encode_png(pixels: np.ndarray) -> bytes:
    img = Image.fromarray(np.asarray(pixels, dtype=np.uint8))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


def render_frame_png(
    skeleton: Skeleton,
    pose: Pose,
    camera: CameraSpec = CameraSpec(),
    ground_height: float = 0.0,
) -> bytes:
    return encode_png(render_frame(skeleton, pose, camera, ground_height))
