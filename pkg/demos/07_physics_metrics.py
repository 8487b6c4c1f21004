"""Physical-plausibility rewards and millimeter metrics on crafted motions."""

import numpy as np

from textmotion import Motion, Pose, default_skeleton, standing_pose
from textmotion.physics import (
    combined_reward,
    default_proxy,
    derive_contacts,
    metric_float,
    metric_pene,
    reward_floating,
    reward_foot_sliding,
    reward_penetration,
)

skel = default_skeleton()
proxy = default_proxy(skel)
base = standing_pose(skel, proxy.radii)


def shifted(lift=0.0, step=(0.0, 0.0, 0.0), n=6):
    return Motion(
        tuple(
            Pose(
                base.root_translation + np.array([0.0, lift, 0.0]) + i * np.asarray(step),
                base.root_rotation,
                base.body_rotations,
            )
            for i in range(n)
        ),
        fps=20.0,
    )


cases = {
    "standing on the ground": shifted(),
    "hovering 5 cm up": shifted(lift=0.05),
    "sunk 2 cm into the ground": shifted(lift=-0.02),
    "sliding along the ground": shifted(step=(0.1, 0.0, 0.0)),
}

for name, motion in cases.items():
    contacts = derive_contacts(skel, motion, proxy)
    print(f"\n{name}:")
    print(f"  contacts (left foot): {contacts.labels[0].astype(int)}")
    print(f"  sliding reward     : {reward_foot_sliding(skel, motion, contacts):.4f}")
    print(f"  floating reward    : {reward_floating(skel, motion, proxy):.4f}")
    print(f"  penetration reward : {reward_penetration(skel, motion, proxy):.4f}")
    print(f"  combined (uniform) : {combined_reward(skel, motion, contacts, proxy):.4f}")
    print(f"  Float = {metric_float(skel, motion, proxy):7.2f} mm   "
          f"Pene = {metric_pene(skel, motion, proxy):6.2f} mm")

print("\nexact reference values: exp(-0.05) =", round(np.exp(-0.05), 4),
      " exp(-0.02) =", round(np.exp(-0.02), 4))
