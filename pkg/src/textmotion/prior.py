"""Latent pose priors: the affine reference prior and pluggable variants.

A prior maps a low-dimensional latent code to a full pose vector. The IK
solver searches that latent space rather than raw joint angles, so the
decoded poses stay near the prior's span. The reference prior is an affine
map fit by principal-component analysis on a bundled pose set; its decode
Jacobian is exact. Opaque priors (e.g. a remote neural decoder) fall back
to finite-difference Jacobians in the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .formats import load_matrices, save_matrices
from .pose import Pose


@dataclass(frozen=True)
class AffinePosePrior:
    """decode(z) = mean + components.T @ z with orthonormal component rows."""

    components: np.ndarray  # (latent_dim, pose_dim)
    mean: np.ndarray        # (pose_dim,)

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        m = np.asarray(self.mean, dtype=float).ravel()
        if c.shape[1] != m.size:
            raise ValueError("components and mean disagree on pose dimension")
        object.__setattr__(self, "components", c)
        object.__setattr__(self, "mean", m)

    @property
    def latent_dim(self) -> int:
        return self.components.shape[0]

    @property
    def pose_dim(self) -> int:
        return self.components.shape[1]

    def decode_vector(self, z: np.ndarray) -> np.ndarray:
        return self.mean + self.components.T @ np.asarray(z, dtype=float)

    def decode(self, z: np.ndarray) -> Pose:
        return Pose.from_vector(self.decode_vector(z))

    def encode(self, pose: Pose) -> np.ndarray:
        return self.components @ (pose.as_vector() - self.mean)

    def decode_jacobian(self, z: np.ndarray) -> np.ndarray:
        """(pose_dim, latent_dim), constant for an affine map."""
        return self.components.T


@dataclass(frozen=True)
class IdentityPrior:
    """Latent = raw pose vector, for analytic solver tests."""

    dim: int

    @property
    def latent_dim(self) -> int:
        return self.dim

    @property
    def pose_dim(self) -> int:
        return self.dim

    def decode_vector(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float).copy()

    def decode(self, z: np.ndarray) -> Pose:
        return Pose.from_vector(self.decode_vector(z))

    def encode(self, pose: Pose) -> np.ndarray:
        return pose.as_vector()

    def decode_jacobian(self, z: np.ndarray) -> np.ndarray:
        return np.eye(self.dim)


def numeric_decode_jacobian(prior, z: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference decode Jacobian for priors without an analytic one."""
    z = np.asarray(z, dtype=float)
    cols = []
    for i in range(z.size):
        hi, lo = z.copy(), z.copy()
        hi[i] += h
        lo[i] -= h
        cols.append((prior.decode_vector(hi) - prior.decode_vector(lo)) / (2 * h))
    return np.stack(cols, axis=1)


def fit_affine_prior(pose_vectors: np.ndarray, latent_dim: int) -> AffinePosePrior:
    """PCA fit: mean pose plus the top principal directions as components."""
    data = np.atleast_2d(np.asarray(pose_vectors, dtype=float))
    if latent_dim > min(data.shape):
        raise ValueError("latent_dim exceeds what the sample set supports")
    mean = data.mean(axis=0)
    _, _, vt = np.linalg.svd(data - mean, full_matrices=False)
    return AffinePosePrior(vt[:latent_dim], mean)


def save_prior(path: str | Path, prior: AffinePosePrior) -> None:
    save_matrices(path, {"components": prior.components, "mean": prior.mean[None, :]})


def load_prior(path: str | Path) -> AffinePosePrior:
    mats = load_matrices(path)
    return AffinePosePrior(mats["components"], mats["mean"][0])


def default_pose_prior() -> AffinePosePrior:
    """The bundled 32-dim prior for the 22-joint skeleton."""
    ref = resources.files("textmotion.data") / "pose_prior.txt"
    with resources.as_file(ref) as path:
        return load_prior(path)


class RemotePosePrior:
    """Prior whose decoder lives behind a POST /decode endpoint.

    The endpoint takes {"latent": [...]} and answers {"pose": [...]}.
    No analytic Jacobian; the solver differentiates by finite differences.
    """

    def __init__(self, url: str, latent_dim: int, pose_dim: int, timeout: float = 10.0):
        self.url = url.rstrip("/")
        self._latent_dim = latent_dim
        self._pose_dim = pose_dim
        self.timeout = timeout

    @property
    def latent_dim(self) -> int:
        return self._latent_dim

    @property
    def pose_dim(self) -> int:
        return self._pose_dim

    def decode_vector(self, z: np.ndarray) -> np.ndarray:
        import requests

        resp = requests.post(
            self.url + "/decode",
            json={"latent": [float(v) for v in np.asarray(z).ravel()]},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return np.asarray(resp.json()["pose"], dtype=float)

    def decode(self, z: np.ndarray) -> Pose:
        return Pose.from_vector(self.decode_vector(z))

    def encode(self, pose: Pose) -> np.ndarray:
        raise NotImplementedError("remote priors only decode; start from zeros")

    decode_jacobian = None
