"""Regenerate the bundled pose set and the affine pose prior fit to it.

Run from the repo root:  python3 tools/build_prior.py

The sample poses are a seeded low-rank family around the standing pose:
32 random rotation-space directions with a decaying amplitude spectrum,
plus a little isotropic jitter. The prior is the 32-component PCA fit.
"""

from pathlib import Path

import numpy as np

from textmotion.formats import save_motion
from textmotion.kinematics import standing_pose
from textmotion.pose import Motion, Pose
from textmotion.prior import fit_affine_prior, save_prior
from textmotion.skeleton import default_skeleton

LATENT_DIM = 32
N_SAMPLES = 400
SEED = 20240811


def build_pose_samples() -> np.ndarray:
    skel = default_skeleton()
    base = standing_pose(skel).as_vector()
    dim = base.size

    rng = np.random.default_rng(SEED)
    directions = np.zeros((LATENT_DIM, dim))
    # span rotation coordinates only; world placement stays near standing
    rot = rng.normal(size=(LATENT_DIM, dim - 3))
    rot /= np.linalg.norm(rot, axis=1, keepdims=True)
    directions[:, 3:] = rot

    spectrum = np.linspace(0.6, 0.06, LATENT_DIM)
    coeffs = rng.normal(size=(N_SAMPLES, LATENT_DIM)) * spectrum
    noise = rng.normal(scale=0.004, size=(N_SAMPLES, dim))
    return base + coeffs @ directions + noise


def main() -> None:
    data_dir = Path(__file__).resolve().parent.parent / "src" / "textmotion" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    samples = build_pose_samples()
    save_motion(data_dir / "prior_poses.motion", Motion.from_array(samples, fps=1.0))
    prior = fit_affine_prior(samples, LATENT_DIM)
    save_prior(data_dir / "pose_prior.txt", prior)

    recon = np.array(
        [prior.decode_vector(prior.encode(Pose.from_vector(s))) for s in samples[:20]]
    )
    print("wrote", data_dir / "prior_poses.motion")
    print("wrote", data_dir / "pose_prior.txt")
    print("max reconstruction error on first samples:", np.abs(recon - samples[:20]).max())


if __name__ == "__main__":
    main()
